/**
 * Minimal GPT-style causal transformer, forward pass only (eval mode, no
 * dropout), in float64. Weights come from a checkpoint file; the probe never
 * trains anything. Logits are tied to the token embedding matrix.
 */

import { Tokenizer } from "./tokenizer.js";

export interface BlockWeights {
  ln1_g: number[];
  ln1_b: number[];
  qkv_w: number[]; // d x 3d, row-major
  qkv_b: number[];
  proj_w: number[]; // d x d
  proj_b: number[];
  ln2_g: number[];
  ln2_b: number[];
  fc_w: number[]; // d x d_ff
  fc_b: number[];
  out_w: number[]; // d_ff x d
  out_b: number[];
}

export interface TransformerWeights {
  wte: number[]; // vocab x d
  wpe: number[]; // max_seq x d
  blocks: BlockWeights[];
  lnf_g: number[];
  lnf_b: number[];
}

export interface TransformerSpec {
  d_model: number;
  n_heads: number;
  n_layers: number;
  d_ff: number;
  max_seq: number;
}

const LN_EPS = 1e-5;

function layerNorm(x: Float64Array, n: number, d: number, g: number[], b: number[]): Float64Array {
  const out = new Float64Array(n * d);
  for (let i = 0; i < n; i++) {
    let mean = 0;
    for (let j = 0; j < d; j++) mean += x[i * d + j];
    mean /= d;
    let variance = 0;
    for (let j = 0; j < d; j++) {
      const dv = x[i * d + j] - mean;
      variance += dv * dv;
    }
    variance /= d;
    const inv = 1 / Math.sqrt(variance + LN_EPS);
    for (let j = 0; j < d; j++) {
      out[i * d + j] = (x[i * d + j] - mean) * inv * g[j] + b[j];
    }
  }
  return out;
}

/** out[m x n] = a[m x k] . b[k x n] + bias[n] */
function affine(a: Float64Array, m: number, k: number, b: number[], n: number, bias: number[] | null): Float64Array {
  const out = new Float64Array(m * n);
  for (let i = 0; i < m; i++) {
    for (let p = 0; p < k; p++) {
      const av = a[i * k + p];
      if (av === 0) continue;
      const row = p * n;
      for (let j = 0; j < n; j++) out[i * n + j] += av * b[row + j];
    }
    if (bias) for (let j = 0; j < n; j++) out[i * n + j] += bias[j];
  }
  return out;
}

function gelu(x: number): number {
  return 0.5 * x * (1 + Math.tanh(Math.sqrt(2 / Math.PI) * (x + 0.044715 * x * x * x)));
}

export class TinyTransformer {
  constructor(
    readonly spec: TransformerSpec,
    readonly weights: TransformerWeights,
    readonly tokenizer: Tokenizer,
    readonly modelId: string,
  ) {
    const v = tokenizer.size;
    if (weights.wte.length !== v * spec.d_model) {
      throw new Error(`wte has ${weights.wte.length} entries, expected ${v * spec.d_model}`);
    }
    if (spec.d_model % spec.n_heads !== 0) throw new Error("d_model must divide into heads");
  }

  get maxSeq(): number {
    return this.spec.max_seq;
  }

  /** Final-layer hidden states (after the last LayerNorm), n x d. */
  hiddenStates(tokens: number[]): Float64Array {
    const { d_model: d, n_heads, d_ff } = this.spec;
    const n = tokens.length;
    if (n === 0) throw new Error("empty token sequence");
    if (n > this.spec.max_seq) throw new Error(`sequence length ${n} exceeds max_seq ${this.spec.max_seq}`);
    const dHead = d / n_heads;

    let x = new Float64Array(n * d);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) {
        x[i * d + j] = this.weights.wte[tokens[i] * d + j] + this.weights.wpe[i * d + j];
      }
    }

    for (const block of this.weights.blocks) {
      // attention sublayer
      const normed = layerNorm(x, n, d, block.ln1_g, block.ln1_b);
      const qkv = affine(normed, n, d, block.qkv_w, 3 * d, block.qkv_b);
      const attnOut = new Float64Array(n * d);
      const scale = 1 / Math.sqrt(dHead);
      for (let h = 0; h < n_heads; h++) {
        const qOff = h * dHead;
        const kOff = d + h * dHead;
        const vOff = 2 * d + h * dHead;
        for (let i = 0; i < n; i++) {
          // causal attention: position i sees positions 0..i
          const scores = new Float64Array(i + 1);
          let maxScore = -Infinity;
          for (let t = 0; t <= i; t++) {
            let s = 0;
            for (let j = 0; j < dHead; j++) {
              s += qkv[i * 3 * d + qOff + j] * qkv[t * 3 * d + kOff + j];
            }
            s *= scale;
            scores[t] = s;
            if (s > maxScore) maxScore = s;
          }
          let z = 0;
          for (let t = 0; t <= i; t++) {
            scores[t] = Math.exp(scores[t] - maxScore);
            z += scores[t];
          }
          for (let t = 0; t <= i; t++) {
            const w = scores[t] / z;
            for (let j = 0; j < dHead; j++) {
              attnOut[i * d + qOff + j] += w * qkv[t * 3 * d + vOff + j];
            }
          }
        }
      }
      const projected = affine(attnOut, n, d, block.proj_w, d, block.proj_b);
      for (let i = 0; i < n * d; i++) x[i] += projected[i];

      // feed-forward sublayer
      const normed2 = layerNorm(x, n, d, block.ln2_g, block.ln2_b);
      const inner = affine(normed2, n, d, block.fc_w, d_ff, block.fc_b);
      for (let i = 0; i < inner.length; i++) inner[i] = gelu(inner[i]);
      const outer = affine(inner, n, d_ff, block.out_w, block.out_b.length, block.out_b);
      for (let i = 0; i < n * d; i++) x[i] += outer[i];
    }

    return layerNorm(x, n, d, this.weights.lnf_g, this.weights.lnf_b);
  }

  /**
   * Row i is log p(next token | tokens[0..i]) over the vocabulary
   * (log-softmax of the tied-embedding logits).
   */
  logProbRows(tokens: number[]): Float64Array[] {
    const { d_model: d } = this.spec;
    const v = this.tokenizer.size;
    const hidden = this.hiddenStates(tokens);
    const rows: Float64Array[] = [];
    for (let i = 0; i < tokens.length; i++) {
      const logits = new Float64Array(v);
      let maxLogit = -Infinity;
      for (let t = 0; t < v; t++) {
        let s = 0;
        for (let j = 0; j < d; j++) s += hidden[i * d + j] * this.weights.wte[t * d + j];
        logits[t] = s;
        if (s > maxLogit) maxLogit = s;
      }
      let z = 0;
      for (let t = 0; t < v; t++) z += Math.exp(logits[t] - maxLogit);
      const logZ = maxLogit + Math.log(z);
      for (let t = 0; t < v; t++) logits[t] -= logZ;
      rows.push(logits);
    }
    return rows;
  }
}
