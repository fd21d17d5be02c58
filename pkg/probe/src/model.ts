/**
 * Checkpoint loading and the common causal-LM surface.
 *
 * Model choice is configuration: a checkpoint file fully determines the
 * tokenizer, architecture, and weights. Two checkpoint types are supported:
 * a tiny GPT-style transformer (`tiny-transformer`) and an interpolated
 * count-based model (`ngram`). Only the transformer produces embeddings.
 */

import { readFileSync } from "node:fs";

import { NgramModel, NgramParams } from "./ngram.js";
import { Tokenizer, TokenizerSpec } from "./tokenizer.js";
import { TinyTransformer, TransformerSpec, TransformerWeights } from "./transformer.js";

export interface CausalLM {
  readonly modelId: string;
  readonly tokenizer: Tokenizer;
  readonly maxSeq: number;
  /** log p(tokens[i] | tokens[0..i-1]) for each i in [start, tokens.length). */
  conditionalLogProbs(tokens: number[], start: number): number[];
  /** Mean-pooled, L2-normalized document vector; undefined for models without hidden states. */
  embed?(tokens: number[]): Float64Array;
  readonly embeddingDim?: number;
}

export class TransformerLM implements CausalLM {
  readonly embeddingDim: number;

  constructor(private readonly inner: TinyTransformer) {
    this.embeddingDim = inner.spec.d_model;
  }

  get modelId(): string {
    return this.inner.modelId;
  }

  get tokenizer(): Tokenizer {
    return this.inner.tokenizer;
  }

  get maxSeq(): number {
    return this.inner.maxSeq;
  }

  conditionalLogProbs(tokens: number[], start: number): number[] {
    if (start < 1) throw new Error("start must be >= 1 (position 0 has no left context)");
    const rows = this.inner.logProbRows(tokens);
    const out: number[] = [];
    for (let i = start; i < tokens.length; i++) {
      out.push(rows[i - 1][tokens[i]]);
    }
    return out;
  }

  embed(tokens: number[]): Float64Array {
    const d = this.inner.spec.d_model;
    const hidden = this.inner.hiddenStates(tokens);
    const pooled = new Float64Array(d);
    const n = tokens.length;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) pooled[j] += hidden[i * d + j];
    }
    let norm = 0;
    for (let j = 0; j < d; j++) {
      pooled[j] /= n;
      norm += pooled[j] * pooled[j];
    }
    norm = Math.sqrt(norm);
    if (norm === 0) throw new Error("zero embedding vector");
    for (let j = 0; j < d; j++) pooled[j] /= norm;
    return pooled;
  }
}

export class NgramLM implements CausalLM {
  constructor(private readonly inner: NgramModel) {}

  get modelId(): string {
    return this.inner.modelId;
  }

  get tokenizer(): Tokenizer {
    return this.inner.tokenizer;
  }

  get maxSeq(): number {
    return this.inner.maxSeq;
  }

  conditionalLogProbs(tokens: number[], start: number): number[] {
    return this.inner.logProbSequence(tokens, start);
  }
}

export interface TransformerCheckpoint {
  format: "probe-model";
  version: 1;
  model_id: string;
  type: "tiny-transformer";
  tokenizer: TokenizerSpec;
  spec: TransformerSpec;
  weights: TransformerWeights;
}

export interface NgramCheckpoint {
  format: "probe-model";
  version: 1;
  model_id: string;
  type: "ngram";
  tokenizer: TokenizerSpec;
  params: NgramParams;
}

export type Checkpoint = TransformerCheckpoint | NgramCheckpoint;

export function loadModel(path: string): CausalLM {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new Error(`${path}: cannot read checkpoint (${(e as Error).message})`);
  }
  const ckpt = raw as Checkpoint;
  if (ckpt.format !== "probe-model" || ckpt.version !== 1) {
    throw new Error(`${path}: not a version-1 probe model checkpoint`);
  }
  const tokenizer = new Tokenizer(ckpt.tokenizer);
  if (ckpt.type === "tiny-transformer") {
    return new TransformerLM(new TinyTransformer(ckpt.spec, ckpt.weights, tokenizer, ckpt.model_id));
  }
  if (ckpt.type === "ngram") {
    return new NgramLM(new NgramModel(ckpt.params, tokenizer, ckpt.model_id));
  }
  throw new Error(`${path}: unknown model type '${(ckpt as { type: string }).type}'`);
}
