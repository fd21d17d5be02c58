/**
 * Document embedding: mean-pooled final hidden states, L2-normalized.
 * Long documents are truncated to a configured token budget (recorded in
 * the output header); empty or untokenizable records are skipped and listed.
 */

import { DocumentRecord } from "./jsonl.js";
import { CausalLM } from "./model.js";
import { TokenizationError } from "./tokenizer.js";

export interface EmbeddingRow {
  doc_id: string;
  vector: Float64Array;
}

export interface EmbeddingResult {
  rows: EmbeddingRow[];
  skipped: { doc_id: string; reason: string }[];
  dim: number;
  truncate: number;
}

export function embedDocuments(
  model: CausalLM,
  docs: DocumentRecord[],
  batchSize: number = 16,
  truncate?: number,
): EmbeddingResult {
  if (!model.embed || model.embeddingDim === undefined) {
    throw new Error(`model '${model.modelId}' does not produce embeddings`);
  }
  if (batchSize < 1) throw new Error("batch size must be >= 1");
  const limit = truncate ?? model.maxSeq;

  const rows: EmbeddingRow[] = [];
  const skipped: { doc_id: string; reason: string }[] = [];
  for (let start = 0; start < docs.length; start += batchSize) {
    for (const doc of docs.slice(start, start + batchSize)) {
      if (doc.text.trim() === "") {
        skipped.push({ doc_id: doc.id, reason: "empty text" });
        continue;
      }
      let tokens: number[];
      try {
        tokens = model.tokenizer.encode(doc.text);
      } catch (e) {
        if (e instanceof TokenizationError) {
          skipped.push({ doc_id: doc.id, reason: `tokenization failure: ${e.message}` });
          continue;
        }
        throw e;
      }
      if (tokens.length === 0) {
        skipped.push({ doc_id: doc.id, reason: "no tokens" });
        continue;
      }
      rows.push({ doc_id: doc.id, vector: model.embed(tokens.slice(0, limit)) });
    }
  }
  return { rows, skipped, dim: model.embeddingDim, truncate: limit };
}
