/**
 * Interpolated count-based causal language model.
 *
 * p(w | h) mixes add-alpha estimates of orders 1..N with fixed weights; the
 * counts are fitted once by the `fit-ngram` command and persisted in the
 * checkpoint, so loading a model never touches the training corpus.
 */

import { Tokenizer } from "./tokenizer.js";

export interface NgramParams {
  order: number;
  alpha: number;
  lambdas: number[]; // one per order, summing to 1
  // counts[k-1] maps a space-joined id context+token string to its count;
  // context_totals[k-1] maps the context alone to its total
  counts: Record<string, number>[];
  context_totals: Record<string, number>[];
}

export class NgramModel {
  constructor(
    readonly params: NgramParams,
    readonly tokenizer: Tokenizer,
    readonly modelId: string,
    readonly maxSeq: number = 4096,
  ) {
    const { order, lambdas } = params;
    if (lambdas.length !== order) throw new Error(`need ${order} lambdas, got ${lambdas.length}`);
    const total = lambdas.reduce((a, b) => a + b, 0);
    if (Math.abs(total - 1) > 1e-9) throw new Error("lambdas must sum to 1");
  }

  /** log p(token | previous tokens), interpolated over orders. */
  logProb(context: number[], token: number): number {
    const { order, alpha, lambdas, counts, context_totals } = this.params;
    const v = this.tokenizer.size;
    let p = 0;
    for (let k = 1; k <= order; k++) {
      const ctx = context.slice(Math.max(0, context.length - (k - 1)));
      const ctxKey = ctx.join(" ");
      const key = ctx.length ? `${ctxKey} ${token}` : `${token}`;
      const c = counts[k - 1][key] ?? 0;
      const total = context_totals[k - 1][ctxKey] ?? 0;
      p += lambdas[k - 1] * ((c + alpha) / (total + alpha * v));
    }
    return Math.log(p);
  }

  logProbSequence(tokens: number[], start: number): number[] {
    const out: number[] = [];
    for (let i = start; i < tokens.length; i++) {
      out.push(this.logProb(tokens.slice(0, i), tokens[i]));
    }
    return out;
  }
}

/** Count n-grams of orders 1..order over tokenized documents (BOS-padded). */
export function fitNgramCounts(
  docs: number[][],
  bosId: number,
  order: number,
): Pick<NgramParams, "counts" | "context_totals"> {
  const counts: Record<string, number>[] = Array.from({ length: order }, () => ({}));
  const contextTotals: Record<string, number>[] = Array.from({ length: order }, () => ({}));
  for (const doc of docs) {
    const padded = [...Array(order - 1).fill(bosId), ...doc];
    for (let i = order - 1; i < padded.length; i++) {
      for (let k = 1; k <= order; k++) {
        const ctx = padded.slice(i - (k - 1), i);
        const ctxKey = ctx.join(" ");
        const key = ctx.length ? `${ctxKey} ${padded[i]}` : `${padded[i]}`;
        counts[k - 1][key] = (counts[k - 1][key] ?? 0) + 1;
        contextTotals[k - 1][ctxKey] = (contextTotals[k - 1][ctxKey] ?? 0) + 1;
      }
    }
  }
  return { counts, context_totals: contextTotals };
}
