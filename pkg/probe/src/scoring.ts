/**
 * In-context target scoring.
 *
 * For each example, every candidate target is scored by its summed token
 * log-probability conditioned on the assembled prompt (few-shot demos, then
 * the example input, then the optional instruction). Per-token losses of the
 * input segment and of the correct target are recorded alongside. Examples
 * whose assembled prompt cannot fit the model's context window are flagged
 * and excluded, never silently truncated; the same goes for text the
 * model's tokenizer cannot encode.
 */

import { ScoreRecord, TaskRecord } from "./jsonl.js";
import { CausalLM } from "./model.js";
import { TokenizationError } from "./tokenizer.js";

export interface PromptTemplate {
  name: string;
  demo_separator: string;
  target_separator: string;
  instruction_separator: string;
}

export const DEFAULT_TEMPLATE: PromptTemplate = {
  name: "plain-v1",
  demo_separator: "\n",
  target_separator: "\n",
  instruction_separator: "\n",
};

export interface SkippedExample {
  example_id: string;
  reason: string;
}

export interface ScoringResult {
  records: ScoreRecord[];
  skipped: SkippedExample[];
}

function sum(values: number[]): number {
  return values.reduce((a, b) => a + b, 0);
}

/** Demo prefix text: the first `shots` demo examples with their correct
 * targets, newline-separated (per the template). Empty for zero shots. */
export function demoPrefix(demos: TaskRecord[], shots: number, template: PromptTemplate): string {
  if (shots === 0) return "";
  if (demos.length < shots) {
    throw new Error(`need ${shots} demo examples, got ${demos.length}`);
  }
  const blocks = demos
    .slice(0, shots)
    .map((d) => d.input + template.target_separator + d.targets[d.correct_index]);
  return blocks.join(template.demo_separator) + template.demo_separator;
}

function inputSegment(example: TaskRecord, template: PromptTemplate): string {
  return example.instruction
    ? example.input + template.instruction_separator + example.instruction
    : example.input;
}

export function scoreExample(
  model: CausalLM,
  example: TaskRecord,
  prefixIds: number[],
  template: PromptTemplate,
): ScoreRecord {
  const tok = model.tokenizer;
  const inputIds = tok.encode(inputSegment(example, template));
  const sepIds = tok.encode(template.target_separator);
  const targetIds = example.targets.map((t) => {
    const ids = tok.encode(t);
    if (ids.length === 0) throw new TokenizationError(`target ${JSON.stringify(t)} produced no tokens`);
    return ids;
  });
  if (inputIds.length === 0) throw new TokenizationError("input produced no tokens");

  const contextLen = 1 + prefixIds.length + inputIds.length + sepIds.length;
  const longest = Math.max(...targetIds.map((ids) => ids.length));
  if (contextLen + longest > model.maxSeq) {
    throw new ContextOverflowError(
      `needs ${contextLen + longest} tokens, context window is ${model.maxSeq}`,
    );
  }

  const context = [tok.bosId, ...prefixIds, ...inputIds, ...sepIds];
  const targetLogprobs = targetIds.map((ids) => {
    const seq = [...context, ...ids];
    return sum(model.conditionalLogProbs(seq, context.length));
  });

  const inputStart = 1 + prefixIds.length;
  const inputLogprobs = model.conditionalLogProbs(
    [tok.bosId, ...prefixIds, ...inputIds],
    inputStart,
  );
  const inputLoss = -sum(inputLogprobs) / inputIds.length;

  const correctIds = targetIds[example.correct_index];
  const correctLoss = -targetLogprobs[example.correct_index] / correctIds.length;

  return {
    example_id: example.id,
    target_logprobs: targetLogprobs,
    input_logloss_per_token: inputLoss,
    correct_target_logloss_per_token: correctLoss,
    target_token_counts: targetIds.map((ids) => ids.length),
  };
}

export class ContextOverflowError extends Error {}

export function scoreTask(
  model: CausalLM,
  examples: TaskRecord[],
  shots: number,
  demos: TaskRecord[],
  template: PromptTemplate = DEFAULT_TEMPLATE,
): ScoringResult {
  const prefixText = demoPrefix(demos, shots, template);
  const prefixIds = prefixText === "" ? [] : model.tokenizer.encode(prefixText);
  const records: ScoreRecord[] = [];
  const skipped: SkippedExample[] = [];
  for (const example of examples) {
    try {
      records.push(scoreExample(model, example, prefixIds, template));
    } catch (e) {
      if (e instanceof ContextOverflowError) {
        skipped.push({ example_id: example.id, reason: `context overflow: ${e.message}` });
      } else if (e instanceof TokenizationError) {
        skipped.push({ example_id: example.id, reason: `tokenization failure: ${e.message}` });
      } else {
        throw e;
      }
    }
  }
  return { records, skipped };
}
