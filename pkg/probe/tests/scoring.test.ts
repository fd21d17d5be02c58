import { describe, expect, it } from "vitest";

import { DEFAULT_TEMPLATE, demoPrefix, scoreExample, scoreTask } from "../src/scoring.js";
import { fixtureModel, taskExample } from "./helpers.js";

const model = fixtureModel();
const tok = model.tokenizer;

/**
 * Independent stepwise oracle: re-encode every prefix separately and
 * accumulate one conditional log-probability at a time.
 */
function stepwiseTargetLogprob(context: number[], targetIds: number[]): number {
  let total = 0;
  const seq = [...context];
  for (const id of targetIds) {
    const rows = (model as any).inner.logProbRows(seq);
    total += rows[seq.length - 1][id];
    seq.push(id);
  }
  return total;
}

describe("score-targets", () => {
  it("matches the stepwise accumulation oracle on 20 short examples to 1e-4", () => {
    const inputs = [
      "the cat sat", "a dog ran fast", "numbers 1 2 3", "hello world", "short",
      "question one?", "it rained today", "blue or red", "open the door", "six eggs",
      "a b c d", "last train home", "cold water", "first snow", "try again",
      "two plus two", "read a book", "quiet night", "green field", "end of test",
    ];
    for (let i = 0; i < inputs.length; i++) {
      const example = taskExample(`e${i}`, inputs[i], ["yes", "no", "maybe"], i % 3);
      const record = scoreExample(model, example, [], DEFAULT_TEMPLATE);
      const context = [tok.bosId, ...tok.encode(inputs[i]), ...tok.encode("\n")];
      example.targets.forEach((target, j) => {
        const oracle = stepwiseTargetLogprob(context, tok.encode(target));
        expect(Math.abs(record.target_logprobs[j] - oracle)).toBeLessThan(1e-4);
      });
    }
  });

  it("sums per-token conditionals (additivity)", () => {
    const example = taskExample("add", "alpha beta", ["gamma", "delta"], 0);
    const record = scoreExample(model, example, [], DEFAULT_TEMPLATE);
    const context = [tok.bosId, ...tok.encode("alpha beta"), ...tok.encode("\n")];
    const ids = tok.encode("gamma");
    const perToken = model.conditionalLogProbs([...context, ...ids], context.length);
    const summed = perToken.reduce((a, b) => a + b, 0);
    expect(record.target_logprobs[0]).toBeCloseTo(summed, 10);
    expect(perToken.length).toBe(record.target_token_counts[0]);
  });

  it("gives identical targets identical log-probabilities", () => {
    const example = taskExample("dup", "pick one", ["same", "same"], 0);
    const record = scoreExample(model, example, [], DEFAULT_TEMPLATE);
    expect(Math.abs(record.target_logprobs[0] - record.target_logprobs[1])).toBeLessThan(1e-5);
  });

  it("records non-negative per-token losses", () => {
    const example = taskExample("loss", "some input text", ["out a", "out b"], 1);
    const record = scoreExample(model, example, [], DEFAULT_TEMPLATE);
    expect(record.input_logloss_per_token).toBeGreaterThan(0);
    expect(record.correct_target_logloss_per_token).toBeGreaterThan(0);
  });

  it("conditions on the instruction when present", () => {
    const plain = taskExample("i0", "classify this", ["a", "b"], 0);
    const instructed = taskExample("i1", "classify this", ["a", "b"], 0, "answer with a letter");
    const a = scoreExample(model, plain, [], DEFAULT_TEMPLATE);
    const b = scoreExample(model, instructed, [], DEFAULT_TEMPLATE);
    expect(a.target_logprobs[0]).not.toBe(b.target_logprobs[0]);
  });

  it("prepends few-shot demos and changes the scores", () => {
    const demos = [
      taskExample("d0", "up or down", ["up", "down"], 0),
      taskExample("d1", "hot or cold", ["hot", "cold"], 1),
    ];
    const examples = [taskExample("q", "left or right", ["left", "right"], 0)];
    const zero = scoreTask(model, examples, 0, demos);
    const two = scoreTask(model, examples, 2, demos);
    expect(zero.records[0].target_logprobs).not.toEqual(two.records[0].target_logprobs);
  });

  it("demo prefix uses the first k demos, newline-separated", () => {
    const demos = [
      taskExample("d0", "first question", ["x", "y"], 0),
      taskExample("d1", "second question", ["x", "y"], 1),
      taskExample("d2", "third question", ["x", "y"], 0),
    ];
    expect(demoPrefix(demos, 2, DEFAULT_TEMPLATE)).toBe("first question\nx\nsecond question\ny\n");
    expect(() => demoPrefix(demos, 5, DEFAULT_TEMPLATE)).toThrow(/5 demo examples/);
  });

  it("flags context overflow instead of truncating", () => {
    const long = "a ".repeat(model.maxSeq);
    const result = scoreTask(model, [taskExample("big", long, ["x", "y"], 0)], 0, []);
    expect(result.records).toHaveLength(0);
    expect(result.skipped).toHaveLength(1);
    expect(result.skipped[0].reason).toMatch(/context overflow/);
  });

  it("flags tokenization failures and keeps going", () => {
    const result = scoreTask(
      model,
      [
        taskExample("bad", "café question", ["x", "y"], 0),
        taskExample("good", "plain question", ["x", "y"], 0),
      ],
      0,
      [],
    );
    expect(result.skipped.map((s) => s.example_id)).toEqual(["bad"]);
    expect(result.records.map((r) => r.example_id)).toEqual(["good"]);
  });

  it("is deterministic over repeated runs", () => {
    const examples = [taskExample("r", "repeatable input", ["one", "two", "three"], 2)];
    const a = scoreTask(model, examples, 0, []);
    const b = scoreTask(model, examples, 0, []);
    expect(a).toEqual(b);
  });
});
