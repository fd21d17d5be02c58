#!/usr/bin/env node
/**
 * simbench-probe: extract model-derived inputs for the measurement engine.
 *
 *   embed          documents -> embedding file (+ .skipped.json sidecar)
 *   score-targets  task file -> scores file (+ .skipped.json sidecar)
 *   fit-ngram      corpus -> n-gram model checkpoint
 *   make-fixture-model   seeded random transformer checkpoint
 *
 * Exit codes: 0 success, 1 bad usage/validation, 2 compute failure.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { embedDocuments } from "./embedding.js";
import { fitNgramCheckpoint, makeFixtureTransformer } from "./fixture.js";
import { readDocuments, readTaskExamples, writeEmbeddingsFile, writeScoresFile } from "./jsonl.js";
import { loadModel } from "./model.js";
import { DEFAULT_TEMPLATE, PromptTemplate, scoreTask } from "./scoring.js";

function usage(): never {
  console.error(
    [
      "usage:",
      "  simbench-probe embed --input docs.jsonl --model ckpt.json --out emb.jsonl [--batch-size 16] [--truncate N]",
      "  simbench-probe score-targets --task task.jsonl --model ckpt.json --out scores.jsonl",
      "                 [--shots K --demos demos.jsonl] [--target-separator S]",
      "  simbench-probe fit-ngram --input corpus.jsonl --out ckpt.json [--order 3] [--alpha 0.05] [--model-id ID]",
      "  simbench-probe make-fixture-model --out ckpt.json [--seed 1234] [--model-id ID]",
    ].join("\n"),
  );
  process.exit(1);
}

function required(values: Record<string, string | undefined>, keys: string[]): void {
  for (const key of keys) {
    if (!values[key]) {
      console.error(`error: --${key} is required`);
      usage();
    }
  }
}

function writeSkipped(outPath: string, skipped: object[]): void {
  if (skipped.length === 0) return;
  const sidecar = outPath + ".skipped.json";
  writeFileSync(sidecar, JSON.stringify(skipped, null, 2) + "\n", "utf-8");
  console.error(`skipped ${skipped.length} record(s); reasons listed in ${sidecar}`);
}

function cmdEmbed(args: string[]): void {
  const { values } = parseArgs({
    args,
    options: {
      input: { type: "string" },
      model: { type: "string" },
      out: { type: "string" },
      "batch-size": { type: "string", default: "16" },
      truncate: { type: "string" },
    },
  });
  required(values, ["input", "model", "out"]);
  const model = loadModel(values.model!);
  const docs = readDocuments(values.input!);
  const result = embedDocuments(
    model,
    docs,
    parseInt(values["batch-size"]!, 10),
    values.truncate ? parseInt(values.truncate, 10) : undefined,
  );
  writeEmbeddingsFile(values.out!, model.modelId, result.dim, result.rows, {
    tokenizer_id: model.tokenizer.id,
    pooling: "mean",
    normalized: true,
    truncate: result.truncate,
  });
  writeSkipped(values.out!, result.skipped);
  console.log(`wrote ${result.rows.length} embeddings (dim ${result.dim}) to ${values.out}`);
}

function cmdScoreTargets(args: string[]): void {
  const { values } = parseArgs({
    args,
    options: {
      task: { type: "string" },
      model: { type: "string" },
      out: { type: "string" },
      shots: { type: "string", default: "0" },
      demos: { type: "string" },
      "target-separator": { type: "string" },
    },
  });
  required(values, ["task", "model", "out"]);
  const shots = parseInt(values.shots!, 10);
  if (shots > 0 && !values.demos) {
    console.error("error: --demos is required when --shots > 0");
    usage();
  }
  const template: PromptTemplate = values["target-separator"]
    ? { ...DEFAULT_TEMPLATE, name: "custom", target_separator: values["target-separator"] }
    : DEFAULT_TEMPLATE;
  const model = loadModel(values.model!);
  const examples = readTaskExamples(values.task!);
  const demos = values.demos ? readTaskExamples(values.demos) : [];
  const result = scoreTask(model, examples, shots, demos, template);
  writeScoresFile(values.out!, model.modelId, model.tokenizer.id, shots, result.records, {
    prompt_template: JSON.stringify(template),
  });
  writeSkipped(values.out!, result.skipped);
  console.log(`scored ${result.records.length}/${examples.length} examples to ${values.out}`);
}

function cmdFitNgram(args: string[]): void {
  const { values } = parseArgs({
    args,
    options: {
      input: { type: "string" },
      out: { type: "string" },
      order: { type: "string", default: "3" },
      alpha: { type: "string", default: "0.05" },
      "model-id": { type: "string" },
    },
  });
  required(values, ["input", "out"]);
  const texts = readDocuments(values.input!).map((d) => d.text);
  const ckpt = fitNgramCheckpoint(texts, {
    order: parseInt(values.order!, 10),
    alpha: parseFloat(values.alpha!),
    modelId: values["model-id"],
  });
  writeFileSync(values.out!, JSON.stringify(ckpt) + "\n", "utf-8");
  console.log(`fitted ${ckpt.model_id} on ${texts.length} documents -> ${values.out}`);
}

function cmdMakeFixtureModel(args: string[]): void {
  const { values } = parseArgs({
    args,
    options: {
      out: { type: "string" },
      seed: { type: "string", default: "1234" },
      "model-id": { type: "string" },
    },
  });
  required(values, ["out"]);
  const ckpt = makeFixtureTransformer(parseInt(values.seed!, 10), values["model-id"] ?? undefined);
  writeFileSync(values.out!, JSON.stringify(ckpt) + "\n", "utf-8");
  console.log(`wrote fixture checkpoint ${ckpt.model_id} -> ${values.out}`);
}

const commands: Record<string, (args: string[]) => void> = {
  embed: cmdEmbed,
  "score-targets": cmdScoreTargets,
  "fit-ngram": cmdFitNgram,
  "make-fixture-model": cmdMakeFixtureModel,
};

function main(): void {
  const [, , command, ...rest] = process.argv;
  const handler = command ? commands[command] : undefined;
  if (!handler) usage();
  try {
    handler(rest);
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    process.exit(2);
  }
}

main();
