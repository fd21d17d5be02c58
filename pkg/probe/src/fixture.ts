/**
 * Deterministic fixture checkpoints for tests and demos. Weight scales are
 * chosen so the random transformer produces well-behaved (non-saturated)
 * distributions; nothing here is trained.
 */

import { gaussian, splitmix32 } from "./prng.js";
import { BOS, TokenizerSpec, UNK } from "./tokenizer.js";
import { NgramCheckpoint, TransformerCheckpoint } from "./model.js";
import { fitNgramCounts } from "./ngram.js";
import { Tokenizer } from "./tokenizer.js";

const CHAR_VOCAB = [BOS, ...Array.from("abcdefghijklmnopqrstuvwxyz0123456789 .,?!'\n-")];

export function makeFixtureTransformer(seed: number = 1234, modelId = "tiny-fixture-lm"): TransformerCheckpoint {
  const rng = splitmix32(seed);
  const vocab = CHAR_VOCAB;
  const spec = { d_model: 24, n_heads: 2, n_layers: 2, d_ff: 48, max_seq: 192 };
  const v = vocab.length;
  const d = spec.d_model;

  const normal = (count: number, scale: number) =>
    Array.from({ length: count }, () => gaussian(rng) * scale);
  const ones = (count: number) => Array.from({ length: count }, () => 1);
  const zeros = (count: number) => Array.from({ length: count }, () => 0);

  const block = () => ({
    ln1_g: ones(d),
    ln1_b: zeros(d),
    qkv_w: normal(d * 3 * d, 0.25 / Math.sqrt(d)),
    qkv_b: zeros(3 * d),
    proj_w: normal(d * d, 0.25 / Math.sqrt(d)),
    proj_b: zeros(d),
    ln2_g: ones(d),
    ln2_b: zeros(d),
    fc_w: normal(d * spec.d_ff, 0.25 / Math.sqrt(d)),
    fc_b: zeros(spec.d_ff),
    out_w: normal(spec.d_ff * d, 0.25 / Math.sqrt(spec.d_ff)),
    out_b: zeros(d),
  });

  return {
    format: "probe-model",
    version: 1,
    model_id: modelId,
    type: "tiny-transformer",
    tokenizer: { type: "char", vocab },
    spec,
    weights: {
      wte: normal(v * d, 0.4),
      wpe: normal(spec.max_seq * d, 0.1),
      blocks: Array.from({ length: spec.n_layers }, block),
      lnf_g: ones(d),
      lnf_b: zeros(d),
    },
  };
}

/** Fit an interpolated n-gram checkpoint from whitespace-tokenized texts. */
export function fitNgramCheckpoint(
  texts: string[],
  options: { order?: number; alpha?: number; lambdas?: number[]; modelId?: string } = {},
): NgramCheckpoint {
  const order = options.order ?? 3;
  const alpha = options.alpha ?? 0.05;
  const lambdas = options.lambdas ?? (order === 3 ? [0.1, 0.3, 0.6] : Array(order).fill(1 / order));
  const words = new Set<string>();
  for (const text of texts) for (const w of text.split(/\s+/)) if (w) words.add(w);
  const tokenizerSpec: TokenizerSpec = { type: "word", vocab: [BOS, UNK, ...[...words].sort()] };
  const tokenizer = new Tokenizer(tokenizerSpec);
  const docs = texts.map((t) => tokenizer.encode(t));
  const { counts, context_totals } = fitNgramCounts(docs, tokenizer.bosId, order);
  return {
    format: "probe-model",
    version: 1,
    model_id: options.modelId ?? `ngram-${order}-fitted`,
    type: "ngram",
    tokenizer: tokenizerSpec,
    params: { order, alpha, lambdas, counts, context_totals },
  };
}
