import { spawnSync } from "node:child_process";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { embedDocuments } from "../src/embedding.js";
import { decodeVector, readJsonlObjects, writeEmbeddingsFile } from "../src/jsonl.js";
import { fixtureModel, tmpDir } from "./helpers.js";

const model = fixtureModel();

function doc(id: string, text: string) {
  return { id, text, meta: {} };
}

describe("embed", () => {
  it("gives duplicate documents identical vectors", () => {
    const result = embedDocuments(model, [doc("a", "same text here"), doc("b", "same text here")]);
    expect(Array.from(result.rows[0].vector)).toEqual(Array.from(result.rows[1].vector));
  });

  it("produces unit-norm vectors", () => {
    const result = embedDocuments(model, [doc("a", "something to embed")]);
    const norm = Math.sqrt(result.rows[0].vector.reduce((s, v) => s + v * v, 0));
    expect(norm).toBeCloseTo(1.0, 9);
  });

  it("skips empty and untokenizable records with reasons", () => {
    const result = embedDocuments(model, [
      doc("empty", "   "),
      doc("bad", "étrange"),
      doc("ok", "fine text"),
    ]);
    expect(result.rows.map((r) => r.doc_id)).toEqual(["ok"]);
    expect(result.skipped).toEqual([
      { doc_id: "empty", reason: "empty text" },
      { doc_id: "bad", reason: expect.stringContaining("tokenization failure") },
    ]);
  });

  it("truncates long documents to the configured budget", () => {
    const long = "word ".repeat(500);
    const result = embedDocuments(model, [doc("long", long)], 16, 32);
    expect(result.truncate).toBe(32);
    // same as embedding just the first 32 tokens
    const head = model.tokenizer.encode(long).slice(0, 32);
    expect(Array.from(result.rows[0].vector)).toEqual(Array.from(model.embed(head)));
  });

  it("batch size does not change results", () => {
    const docs = Array.from({ length: 7 }, (_, i) => doc(`d${i}`, `document number ${i}`));
    const a = embedDocuments(model, docs, 1);
    const b = embedDocuments(model, docs, 5);
    expect(a.rows.map((r) => Array.from(r.vector))).toEqual(b.rows.map((r) => Array.from(r.vector)));
  });

  it("round-trips vectors through the base64 encoding", () => {
    const result = embedDocuments(model, [doc("a", "vector round trip")]);
    const dir = tmpDir("probe-emb-");
    const out = join(dir, "emb.jsonl");
    writeEmbeddingsFile(out, model.modelId, result.dim, result.rows);
    const lines = readJsonlObjects(out);
    expect(lines[0].obj).toMatchObject({ schema: "simbench-embeddings", version: 1, dim: result.dim });
    const decoded = decodeVector(lines[1].obj.vector as string);
    for (let i = 0; i < result.dim; i++) {
      expect(decoded[i]).toBeCloseTo(result.rows[0].vector[i], 6);
    }
  });
});

describe("interchange with the measurement engine", () => {
  it("embedding files load and index losslessly in the engine", () => {
    const docs = Array.from({ length: 10 }, (_, i) => doc(`d${i}`, `interchange doc ${i}`));
    const result = embedDocuments(model, docs);
    const dir = tmpDir("probe-roundtrip-");
    const embPath = join(dir, "emb.jsonl");
    writeEmbeddingsFile(embPath, model.modelId, result.dim, result.rows);

    const python = spawnSync(
      "python3",
      [
        "-c",
        `
import sys
import numpy as np
from simbench.interchange import load_embeddings
from simbench.embed import build_shards, load_manifest, scan

header, ids, matrix = load_embeddings(sys.argv[1])
assert header["model_id"] == sys.argv[2], header
manifest = load_manifest(build_shards(zip(ids, matrix), sys.argv[3], shard_size=4))
[res] = scan(matrix[:1].astype(np.float64), [ids[0]], manifest, k=3)
assert abs(res.max_sim - 1.0) < 1e-6, res
assert res.argmax_id == ids[0], res
print("ok", len(ids), matrix.shape[1])
`,
        embPath,
        model.modelId,
        join(dir, "index"),
      ],
      { encoding: "utf-8" },
    );
    expect(python.status, python.stderr).toBe(0);
    expect(python.stdout.trim()).toBe(`ok 10 ${model.embeddingDim}`);
  });
});
