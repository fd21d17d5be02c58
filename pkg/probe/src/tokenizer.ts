/**
 * Deterministic tokenizers driven by the model checkpoint's vocabulary.
 *
 * Character tokenizers are closed-vocabulary: text containing a character
 * outside the vocabulary cannot be tokenized (the caller skips and lists
 * such records). Word tokenizers map unknown words to an <unk> id so any
 * whitespace-separated text tokenizes.
 */

export const BOS = "<bos>";
export const UNK = "<unk>";

export interface TokenizerSpec {
  type: "char" | "word";
  vocab: string[]; // BOS must be present; word vocabs include UNK
}

export class TokenizationError extends Error {}

export class Tokenizer {
  readonly type: "char" | "word";
  readonly vocab: string[];
  readonly index: Map<string, number>;
  readonly bosId: number;
  readonly unkId: number | null;
  readonly id: string;

  constructor(spec: TokenizerSpec) {
    this.type = spec.type;
    this.vocab = spec.vocab;
    this.index = new Map(spec.vocab.map((t, i) => [t, i]));
    if (!this.index.has(BOS)) throw new Error(`tokenizer vocabulary must include ${BOS}`);
    this.bosId = this.index.get(BOS)!;
    this.unkId = this.index.has(UNK) ? this.index.get(UNK)! : null;
    this.id = `probe-${spec.type}-v${spec.vocab.length}`;
  }

  get size(): number {
    return this.vocab.length;
  }

  /** Token ids for a text; throws TokenizationError for closed vocabularies. */
  encode(text: string): number[] {
    const units = this.type === "char" ? Array.from(text) : text.split(/\s+/).filter((w) => w !== "");
    return units.map((u) => {
      const id = this.index.get(u);
      if (id !== undefined) return id;
      if (this.unkId !== null) return this.unkId;
      throw new TokenizationError(`token ${JSON.stringify(u)} not in vocabulary`);
    });
  }
}
