import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { makeFixtureTransformer } from "../src/fixture.js";
import { TaskRecord } from "../src/jsonl.js";
import { TransformerLM } from "../src/model.js";
import { Tokenizer } from "../src/tokenizer.js";
import { TinyTransformer } from "../src/transformer.js";

export function fixtureModel(seed = 1234): TransformerLM {
  const ckpt = makeFixtureTransformer(seed);
  return new TransformerLM(
    new TinyTransformer(ckpt.spec, ckpt.weights, new Tokenizer(ckpt.tokenizer), ckpt.model_id),
  );
}

export function tmpDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function writeJsonl(path: string, rows: object[]): void {
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join("\n") + "\n", "utf-8");
}

export function taskExample(
  id: string,
  input: string,
  targets: string[],
  correctIndex: number,
  instruction: string | null = null,
): TaskRecord {
  return { id, input, instruction, targets, correct_index: correctIndex };
}

export function accuracyOf(records: { example_id: string; target_logprobs: number[] }[], byId: Map<string, number>): number {
  let correct = 0;
  for (const rec of records) {
    let best = 0;
    for (let i = 1; i < rec.target_logprobs.length; i++) {
      if (rec.target_logprobs[i] > rec.target_logprobs[best]) best = i;
    }
    if (best === byId.get(rec.example_id)) correct += 1;
  }
  return correct / records.length;
}
