import { spawnSync } from "node:child_process";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { tmpDir, writeJsonl } from "./helpers.js";

const CLI = join(__dirname, "..", "dist", "cli.js");

function run(...args: string[]) {
  return spawnSync("node", [CLI, ...args], { encoding: "utf-8" });
}

describe("probe CLI", () => {
  it("prints usage and exits 1 without a command", () => {
    const result = run();
    expect(result.status).toBe(1);
    expect(result.stderr).toMatch(/usage:/);
  });

  it("drives make-fixture-model -> embed -> score-targets end to end", () => {
    const dir = tmpDir("probe-cli-");
    const ckpt = join(dir, "model.json");
    expect(run("make-fixture-model", "--out", ckpt, "--seed", "7").status).toBe(0);

    const docs = join(dir, "docs.jsonl");
    writeJsonl(docs, [
      { id: "d0", text: "first document", meta: {} },
      { id: "d1", text: "", meta: {} },
      { id: "d2", text: "third document", meta: {} },
    ]);
    const emb = join(dir, "emb.jsonl");
    const embRun = run("embed", "--input", docs, "--model", ckpt, "--out", emb);
    expect(embRun.status, embRun.stderr).toBe(0);
    expect(embRun.stdout).toMatch(/wrote 2 embeddings/);
    const skipped = JSON.parse(readFileSync(emb + ".skipped.json", "utf-8"));
    expect(skipped).toEqual([{ doc_id: "d1", reason: "empty text" }]);

    const task = join(dir, "task.jsonl");
    writeJsonl(task, [
      { id: "t0", input: "up or down", instruction: null, targets: ["up", "down"], correct_index: 0 },
      { id: "t1", input: "yes or no", instruction: null, targets: ["yes", "no"], correct_index: 1 },
    ]);
    const scores = join(dir, "scores.jsonl");
    const scoreRun = run("score-targets", "--task", task, "--model", ckpt, "--out", scores);
    expect(scoreRun.status, scoreRun.stderr).toBe(0);
    const lines = readFileSync(scores, "utf-8").trim().split("\n");
    const header = JSON.parse(lines[0]);
    expect(header).toMatchObject({ schema: "simbench-scores", version: 1, shots: 0 });
    expect(header.prompt_template).toContain("plain-v1");
    expect(lines).toHaveLength(3);
    expect(existsSync(scores + ".skipped.json")).toBe(false);
  });

  it("supports few-shot scoring with a demo file", () => {
    const dir = tmpDir("probe-cli-shots-");
    const ckpt = join(dir, "model.json");
    run("make-fixture-model", "--out", ckpt);
    const task = join(dir, "task.jsonl");
    const demos = join(dir, "demos.jsonl");
    writeJsonl(task, [{ id: "t0", input: "query", instruction: null, targets: ["a", "b"], correct_index: 0 }]);
    writeJsonl(demos, [
      { id: "d0", input: "demo one", instruction: null, targets: ["a", "b"], correct_index: 0 },
      { id: "d1", input: "demo two", instruction: null, targets: ["a", "b"], correct_index: 1 },
    ]);
    const out = join(dir, "scores.jsonl");
    const result = run("score-targets", "--task", task, "--model", ckpt, "--out", out, "--shots", "2", "--demos", demos);
    expect(result.status, result.stderr).toBe(0);
    expect(JSON.parse(readFileSync(out, "utf-8").split("\n")[0]).shots).toBe(2);
  });

  it("requires demos when shots > 0", () => {
    const dir = tmpDir("probe-cli-err-");
    const result = run("score-targets", "--task", "x.jsonl", "--model", "m.json", "--out", "o.jsonl", "--shots", "1");
    expect(result.status).toBe(1);
    expect(result.stderr).toMatch(/--demos is required/);
  });

  it("exits 2 on compute failures", () => {
    const dir = tmpDir("probe-cli-fail-");
    const result = run("embed", "--input", join(dir, "missing.jsonl"), "--model", join(dir, "no.json"), "--out", join(dir, "o.jsonl"));
    expect(result.status).toBe(2);
  });

  it("fits an n-gram checkpoint from a corpus", () => {
    const dir = tmpDir("probe-cli-ngram-");
    const corpus = join(dir, "corpus.jsonl");
    writeJsonl(corpus, [
      { id: "c0", text: "one two three", meta: {} },
      { id: "c1", text: "two three four", meta: {} },
    ]);
    const ckpt = join(dir, "ngram.json");
    const result = run("fit-ngram", "--input", corpus, "--out", ckpt, "--order", "2", "--model-id", "tiny-ngram");
    expect(result.status, result.stderr).toBe(0);
    const parsed = JSON.parse(readFileSync(ckpt, "utf-8"));
    expect(parsed).toMatchObject({ format: "probe-model", type: "ngram", model_id: "tiny-ngram" });
  });
});
