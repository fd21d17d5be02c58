import json
from pathlib import Path

import numpy as np
import pytest

from simbench.corpus import TaskExample, write_task_examples
from simbench.interchange import ExampleScores, write_embeddings, write_scores

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def write_docs(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def unit_vec(rng, dim):
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def mini_workspace(tmp_path):
    """A small but complete input set: corpus + 1 task + embeddings + scores
    for a perfect and a noisy model. Everything seeded."""
    rng = np.random.default_rng(42)
    dim = 8
    n_docs, n_examples = 40, 12

    corpus_path = tmp_path / "corpus.jsonl"
    write_docs(
        corpus_path,
        [{"id": f"doc{i:03d}", "text": f"reference document {i} alpha beta", "meta": {}} for i in range(n_docs)],
    )
    write_embeddings(
        tmp_path / "corpus.emb.jsonl", "mini-embedder",
        [(f"doc{i:03d}", unit_vec(rng, dim)) for i in range(n_docs)],
    )

    examples = [
        TaskExample(
            id=f"ex{i:03d}",
            input=f"question number {i} alpha gamma",
            targets=("yes", "no"),
            correct_index=i % 2,
        )
        for i in range(n_examples)
    ]
    task_path = tmp_path / "task.jsonl"
    write_task_examples(task_path, examples)
    write_embeddings(
        tmp_path / "task.emb.jsonl", "mini-embedder",
        [(ex.id, unit_vec(rng, dim)) for ex in examples],
    )

    def scores_for(accuracy_mode):
        records = []
        for ex in examples:
            correct = ex.correct_index
            if accuracy_mode == "perfect":
                chosen = correct
            else:
                chosen = int(rng.integers(2))
            lp = [-5.0, -5.0]
            lp[chosen] = -0.5
            records.append(
                ExampleScores(
                    example_id=ex.id,
                    target_logprobs=tuple(lp),
                    input_logloss_per_token=float(rng.uniform(1, 3)),
                    correct_target_logloss_per_token=float(rng.uniform(0.5, 2)),
                    target_token_counts=(1, 1),
                )
            )
        return records

    perfect_path = tmp_path / "perfect.scores.jsonl"
    write_scores(perfect_path, "perfect-model", "mini-tok", 0, scores_for("perfect"))
    noisy_path = tmp_path / "noisy.scores.jsonl"
    write_scores(noisy_path, "noisy-model", "mini-tok", 0, scores_for("noisy"))

    config = {
        "reference_corpora": [
            {"name": "minicorp", "path": str(corpus_path), "embeddings": str(tmp_path / "corpus.emb.jsonl")}
        ],
        "task_datasets": [
            {"name": "minitask", "path": str(task_path), "embeddings": str(tmp_path / "task.emb.jsonl")}
        ],
        "metrics": ["unigram_kl", "max_cosine", "input_ppl"],
        "models": [
            {
                "model_id": "perfect-model",
                "corpus": "minicorp",
                "scores": [{"task": "minitask", "shots": 0, "path": str(perfect_path)}],
            },
            {
                "model_id": "noisy-model",
                "corpus": "minicorp",
                "scores": [{"task": "minitask", "shots": 0, "path": str(noisy_path)}],
            },
        ],
        "kl_sample_size": 30,
        "repeats": 2,
        "top_k": 10,
        "shard_size": 16,
        "seed": 3,
        "alpha": 0.05,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return {"dir": tmp_path, "config": config, "config_path": config_path}
