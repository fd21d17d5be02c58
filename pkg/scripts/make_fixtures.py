#!/usr/bin/env python3
"""Regenerate the checked-in synthetic fixtures under fixtures/.

Everything is seeded, so reruns are byte-identical. The fixtures exercise
the whole pipeline without any model: documents and task inputs are drawn
from synthetic word inventories, embeddings are deterministic functions of
the words (so similar text really is nearby in embedding space), and score
files encode models with controlled accuracy.

One task example is planted verbatim in the reference corpus so the
fixture run demonstrates leakage detection (max cosine similarity of 1).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from simbench.corpus import TaskExample, write_task_examples  # noqa: E402
from simbench.interchange import ExampleScores, write_embeddings, write_scores  # noqa: E402
from simbench.titration import TitrationSpec, build_titration_series  # noqa: E402
from simbench.util import fnv1a64  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
DIM = 32
EMBED_MODEL = "fixture-hash-embedder-v1"


def zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def make_inventory(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i:03d}" for i in range(n)]


SRC_WORDS = make_inventory("src", 300)
TGT_WORDS = make_inventory("tgt", 300)
TOPIC_WORDS = {
    "colors": make_inventory("col", 40),
    "animals": make_inventory("ani", 40),
    "shapes": make_inventory("shp", 40),
}


def draw_text(rng, base_words, base_weights, topic_words=None, topic_share=0.0, length=None):
    length = length or int(rng.integers(8, 30))
    words = []
    for _ in range(length):
        if topic_words is not None and rng.random() < topic_share:
            words.append(topic_words[int(rng.integers(len(topic_words)))])
        else:
            words.append(base_words[int(rng.choice(len(base_words), p=base_weights))])
    return " ".join(words)


def word_vector(word: str) -> np.ndarray:
    rng = np.random.default_rng(fnv1a64(word.encode("utf-8")))
    return rng.standard_normal(DIM)


def embed_text(text: str) -> np.ndarray:
    vecs = [word_vector(w) for w in text.split()]
    v = np.mean(vecs, axis=0)
    return (v / np.linalg.norm(v)).astype(np.float32)


def write_docs(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def embeddings_for_docs(path: Path, ids_texts) -> None:
    write_embeddings(path, EMBED_MODEL, [(doc_id, embed_text(text)) for doc_id, text in ids_texts])


def make_reference_corpus(rng, planted_text: str) -> None:
    weights = zipf_weights(len(SRC_WORDS))
    rows = []
    for i in range(2000):
        # corpus text leans on the source inventory with light topic mixing
        topic = ["colors", "animals", "shapes"][i % 3]
        text = draw_text(rng, SRC_WORDS, weights, TOPIC_WORDS[topic], topic_share=0.1)
        rows.append({"id": f"ref{i:05d}", "text": text, "meta": {"split": "train"}})
    rows[777] = {"id": "ref00777", "text": planted_text, "meta": {"split": "train"}}
    write_docs(FIXTURES / "ref_corpus.jsonl", rows)
    embeddings_for_docs(FIXTURES / "ref_corpus.embeddings.jsonl", [(r["id"], r["text"]) for r in rows])


def make_task(rng, name: str, n: int, targets: list[str], topic_share: float) -> list[TaskExample]:
    weights = zipf_weights(len(SRC_WORDS))
    examples = []
    for i in range(n):
        text = draw_text(rng, SRC_WORDS, weights, TOPIC_WORDS[name], topic_share=topic_share)
        examples.append(
            TaskExample(
                id=f"{name}{i:04d}",
                input=text,
                targets=tuple(targets),
                correct_index=int(rng.integers(len(targets))),
                instruction=f"classify the {name} passage",
            )
        )
    write_task_examples(FIXTURES / f"task_{name}.jsonl", examples)
    embeddings_for_docs(
        FIXTURES / f"task_{name}.embeddings.jsonl", [(ex.id, ex.input) for ex in examples]
    )
    return examples


def make_scores(rng, model_id: str, shots: int, examples: list[TaskExample], accuracy: float, out: Path) -> None:
    records = []
    for ex in examples:
        k = len(ex.targets)
        noise = np.sort(rng.uniform(-6.0, -1.0, size=k))[::-1]  # descending
        order = list(rng.permutation(k))
        chosen = ex.correct_index if rng.random() < accuracy else int(rng.integers(k))
        # place the largest logprob on the chosen target, rest shuffled
        logprobs = [0.0] * k
        rest = [i for i in order if i != chosen]
        logprobs[chosen] = float(noise[0])
        for slot, value in zip(rest, noise[1:]):
            logprobs[slot] = float(value)
        records.append(
            ExampleScores(
                example_id=ex.id,
                target_logprobs=tuple(logprobs),
                input_logloss_per_token=float(rng.uniform(1.5, 4.5)),
                correct_target_logloss_per_token=float(rng.uniform(0.5, 3.0)),
                target_token_counts=tuple(int(rng.integers(1, 6)) for _ in range(k)),
            )
        )
    write_scores(out, model_id, "fixture-tokenizer-v1", shots, records, extra_header={"prompt_template": "plain-input-v1"})


def make_parallel(rng) -> None:
    src_weights = zipf_weights(len(SRC_WORDS))
    tgt_weights = zipf_weights(len(TGT_WORDS))
    src_rows, tgt_rows = [], []
    for i in range(200):
        length = int(rng.integers(6, 18))
        perm = rng.permutation(len(SRC_WORDS))
        src_text = " ".join(SRC_WORDS[int(rng.choice(len(SRC_WORDS), p=src_weights))] for _ in range(length))
        tgt_text = " ".join(TGT_WORDS[int(rng.choice(len(TGT_WORDS), p=tgt_weights))] for _ in range(length))
        del perm
        targets = ("first", "second")
        ci = int(rng.integers(2))
        src_rows.append(TaskExample(id=f"par{i:04d}", input=src_text, targets=targets, correct_index=ci))
        tgt_rows.append(TaskExample(id=f"par{i:04d}", input=tgt_text, targets=targets, correct_index=ci))
    (FIXTURES / "parallel").mkdir(exist_ok=True)
    write_task_examples(FIXTURES / "parallel" / "source.jsonl", src_rows)
    write_task_examples(FIXTURES / "parallel" / "target.jsonl", tgt_rows)


def make_titration(rng) -> None:
    series = build_titration_series(
        FIXTURES / "parallel" / "source.jsonl",
        FIXTURES / "parallel" / "target.jsonl",
        FIXTURES / "titration",
        language="synthetic",
        spec=TitrationSpec(),
    )
    # accuracy decays as more of each input is translated away from the
    # inventory the fixture "model" was built for
    from simbench.corpus import read_task_examples

    for fraction, path in zip(series.fractions, series.datasets):
        examples = read_task_examples(path)
        embeddings_for_docs(FIXTURES / "titration" / f"{path.stem}.embeddings.jsonl", [(ex.id, ex.input) for ex in examples])
        accuracy = 0.92 - 0.40 * fraction
        make_scores(
            rng, "model-titration", 0, examples, accuracy,
            FIXTURES / "titration" / f"{path.stem}.scores.jsonl",
        )


def make_configs() -> None:
    main_config = {
        "reference_corpora": [
            {"name": "refcorp", "path": "ref_corpus.jsonl", "embeddings": "ref_corpus.embeddings.jsonl"}
        ],
        "task_datasets": [
            {"name": f"task_{t}", "path": f"task_{t}.jsonl", "embeddings": f"task_{t}.embeddings.jsonl"}
            for t in ("colors", "animals", "shapes")
        ],
        "metrics": [
            "unigram_kl", "bigram_kl", "max_cosine", "mean_top1000_cosine",
            "mauve", "input_ppl", "target_ppl",
        ],
        "models": [
            {
                "model_id": "model-alpha",
                "corpus": "refcorp",
                "scores": [
                    {"task": f"task_{t}", "shots": 0, "path": f"scores/model-alpha__task_{t}__0shot.jsonl"}
                    for t in ("colors", "animals", "shapes")
                ],
            },
            {
                "model_id": "model-beta",
                "corpus": "refcorp",
                "scores": [
                    {"task": f"task_{t}", "shots": s, "path": f"scores/model-beta__task_{t}__{s}shot.jsonl"}
                    for t in ("colors", "animals", "shapes")
                    for s in (0, 2)
                ],
            },
        ],
        "kl_sample_size": 600,
        "mauve_sample_size": 400,
        "repeats": 3,
        "top_k": 1000,
        "shard_size": 512,
        "scan_workers": 1,
        "seed": 7,
        "alpha": 0.05,
        "correlation": {"methods": ["spearman", "pearson"], "p_mode": "auto", "permutation_iterations": 10000},
    }
    (FIXTURES / "run_config.json").write_text(
        json.dumps(main_config, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )

    fractions = [0.0, 0.25, 0.5, 0.75, 1.0]
    frac_name = lambda f: f"synthetic-frac{int(round(f * 100)):03d}"  # noqa: E731
    titration_config = {
        "reference_corpora": [
            {"name": "refcorp", "path": "ref_corpus.jsonl", "embeddings": "ref_corpus.embeddings.jsonl"}
        ],
        "task_datasets": [
            {
                "name": frac_name(f),
                "path": f"titration/{frac_name(f)}.jsonl",
                "embeddings": f"titration/{frac_name(f)}.embeddings.jsonl",
            }
            for f in fractions
        ],
        "metrics": ["unigram_kl", "max_cosine"],
        "models": [
            {
                "model_id": "model-titration",
                "corpus": "refcorp",
                "scores": [
                    {"task": frac_name(f), "shots": 0, "path": f"titration/{frac_name(f)}.scores.jsonl"}
                    for f in fractions
                ],
            }
        ],
        "kl_sample_size": 600,
        "repeats": 3,
        "top_k": 1000,
        "shard_size": 512,
        "seed": 11,
        "alpha": 0.05,
        "correlation": {"methods": ["spearman"], "p_mode": "auto", "permutation_iterations": 10000},
        "titration_series": [
            {
                "name": "synthetic",
                "language": "synthetic",
                "members": [{"task": frac_name(f), "fraction": f} for f in fractions],
            }
        ],
    }
    (FIXTURES / "run_config_titration.json").write_text(
        json.dumps(titration_config, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "scores").mkdir(exist_ok=True)

    rng = np.random.default_rng(20240817)

    tasks = {
        "colors": make_task(rng, "colors", 120, ["red", "green", "blue"], topic_share=0.35),
        "animals": make_task(rng, "animals", 100, ["mammal", "bird"], topic_share=0.5),
        "shapes": make_task(rng, "shapes", 80, ["circle", "square", "triangle", "hexagon"], topic_share=0.25),
    }
    # plant one task input verbatim in the reference corpus (leakage case)
    make_reference_corpus(rng, planted_text=tasks["colors"][42].input)

    accuracies = {
        ("model-alpha", "colors"): 0.84,
        ("model-alpha", "animals"): 0.71,
        ("model-alpha", "shapes"): 0.45,
        ("model-beta", "colors"): 0.62,
        ("model-beta", "animals"): 0.80,
        ("model-beta", "shapes"): 0.33,
    }
    for name, examples in tasks.items():
        make_scores(rng, "model-alpha", 0, examples, accuracies[("model-alpha", name)],
                    FIXTURES / "scores" / f"model-alpha__task_{name}__0shot.jsonl")
        for shots in (0, 2):
            bump = 0.05 if shots else 0.0
            make_scores(rng, "model-beta", shots, examples, accuracies[("model-beta", name)] + bump,
                        FIXTURES / "scores" / f"model-beta__task_{name}__{shots}shot.jsonl")

    make_parallel(rng)
    make_titration(rng)
    make_configs()
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
