/**
 * Line-delimited JSON I/O for the formats shared with the measurement
 * engine: task/document files in, embedding/score files out. Embedding
 * vectors are base64-encoded little-endian float32.
 */

import { readFileSync, writeFileSync } from "node:fs";

export interface DocumentRecord {
  id: string;
  text: string;
  meta?: Record<string, string>;
}

export interface TaskRecord {
  id: string;
  input: string;
  instruction?: string | null;
  targets: string[];
  correct_index: number;
}

export interface ScoreRecord {
  example_id: string;
  target_logprobs: number[];
  input_logloss_per_token: number;
  correct_target_logloss_per_token: number;
  target_token_counts: number[];
}

export function readJsonlObjects(path: string): { lineno: number; obj: Record<string, unknown> }[] {
  const out: { lineno: number; obj: Record<string, unknown> }[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, i) => {
    if (line.trim() === "") return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new Error(`${path}:${i + 1}: invalid JSON (${(e as Error).message})`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new Error(`${path}:${i + 1}: record is not an object`);
    }
    out.push({ lineno: i + 1, obj: obj as Record<string, unknown> });
  });
  return out;
}

export function readDocuments(path: string): DocumentRecord[] {
  return readJsonlObjects(path).map(({ lineno, obj }) => {
    if (typeof obj.id !== "string" || obj.id === "") throw new Error(`${path}:${lineno}: missing 'id'`);
    if (typeof obj.text !== "string") throw new Error(`${path}:${lineno}: missing 'text'`);
    return { id: obj.id, text: obj.text, meta: (obj.meta as Record<string, string>) ?? {} };
  });
}

export function readTaskExamples(path: string): TaskRecord[] {
  return readJsonlObjects(path).map(({ lineno, obj }) => {
    if (typeof obj.id !== "string" || obj.id === "") throw new Error(`${path}:${lineno}: missing 'id'`);
    if (typeof obj.input !== "string") throw new Error(`${path}:${lineno}: missing 'input'`);
    const targets = obj.targets;
    if (!Array.isArray(targets) || targets.length < 2 || !targets.every((t) => typeof t === "string")) {
      throw new Error(`${path}:${lineno}: 'targets' must list at least 2 strings`);
    }
    const ci = obj.correct_index;
    if (typeof ci !== "number" || !Number.isInteger(ci) || ci < 0 || ci >= targets.length) {
      throw new Error(`${path}:${lineno}: 'correct_index' out of range`);
    }
    const instruction = obj.instruction;
    return {
      id: obj.id,
      input: obj.input,
      instruction: typeof instruction === "string" ? instruction : null,
      targets: targets as string[],
      correct_index: ci,
    };
  });
}

export function encodeVector(vec: Float64Array | number[]): string {
  const buf = Buffer.alloc(vec.length * 4);
  for (let i = 0; i < vec.length; i++) buf.writeFloatLE(Math.fround(vec[i] as number), i * 4);
  return buf.toString("base64");
}

export function decodeVector(b64: string): Float32Array {
  const buf = Buffer.from(b64, "base64");
  const out = new Float32Array(buf.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = buf.readFloatLE(i * 4);
  return out;
}

export function writeEmbeddingsFile(
  path: string,
  modelId: string,
  dim: number,
  rows: { doc_id: string; vector: Float64Array | number[] }[],
  extraHeader: Record<string, unknown> = {},
): void {
  const header = { schema: "simbench-embeddings", version: 1, model_id: modelId, dim, ...extraHeader };
  const lines = [JSON.stringify(header)];
  for (const row of rows) {
    lines.push(JSON.stringify({ doc_id: row.doc_id, vector: encodeVector(row.vector) }));
  }
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

export function writeScoresFile(
  path: string,
  modelId: string,
  tokenizerId: string,
  shots: number,
  records: ScoreRecord[],
  extraHeader: Record<string, unknown> = {},
): void {
  const header = {
    schema: "simbench-scores",
    version: 1,
    model_id: modelId,
    tokenizer_id: tokenizerId,
    shots,
    ...extraHeader,
  };
  const lines = [JSON.stringify(header)];
  for (const rec of records) lines.push(JSON.stringify(rec));
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}
