import { describe, expect, it } from "vitest";

import { fitNgramCheckpoint } from "../src/fixture.js";
import { NgramLM } from "../src/model.js";
import { NgramModel } from "../src/ngram.js";
import { Tokenizer } from "../src/tokenizer.js";

function modelFrom(texts: string[], options = {}) {
  const ckpt = fitNgramCheckpoint(texts, options);
  return new NgramLM(new NgramModel(ckpt.params, new Tokenizer(ckpt.tokenizer), ckpt.model_id));
}

describe("fitted n-gram model", () => {
  it("produces normalized conditionals", () => {
    const model = modelFrom(["a b c a b", "b c a", "c c c a b"]);
    const tok = model.tokenizer;
    for (const context of [[tok.bosId], [tok.bosId, ...tok.encode("a")], [tok.bosId, ...tok.encode("a b")]]) {
      let z = 0;
      for (let t = 0; t < tok.size; t++) {
        z += Math.exp(model.conditionalLogProbs([...context, t], context.length)[0]);
      }
      expect(z).toBeCloseTo(1.0, 9);
    }
  });

  it("learns strong bigram continuations", () => {
    const texts = Array.from({ length: 50 }, (_, i) =>
      i % 2 === 0 ? "storm cloud rain follows" : "sun shine dry follows",
    );
    const model = modelFrom(texts);
    const tok = model.tokenizer;
    const ctx = [tok.bosId, ...tok.encode("storm cloud")];
    const pRain = model.conditionalLogProbs([...ctx, ...tok.encode("rain")], ctx.length)[0];
    const pDry = model.conditionalLogProbs([...ctx, ...tok.encode("dry")], ctx.length)[0];
    expect(pRain).toBeGreaterThan(pDry);
  });

  it("maps unknown words to <unk> instead of failing", () => {
    const model = modelFrom(["known words only"]);
    const ids = model.tokenizer.encode("totally novel words");
    expect(ids).toContain(model.tokenizer.unkId);
  });

  it("is deterministic across fits", () => {
    const texts = ["x y z", "z y x", "y y y"];
    const a = fitNgramCheckpoint(texts);
    const b = fitNgramCheckpoint(texts);
    expect(a).toEqual(b);
  });

  it("validates interpolation weights", () => {
    const ckpt = fitNgramCheckpoint(["a b"], { order: 2 });
    ckpt.params.lambdas = [0.9, 0.3];
    expect(
      () => new NgramModel(ckpt.params, new Tokenizer(ckpt.tokenizer), "bad"),
    ).toThrow(/sum to 1/);
  });
});
