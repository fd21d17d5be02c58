"""Pipeline stages over a run directory.

A run directory is self-describing: the resolved config and its hash live
at the top, and every stage reads its inputs from disk and writes artifacts
stamped with that hash. Stages are deterministic functions of (config,
input files, seed), so re-running any stage reproduces its outputs byte for
byte.

Layout:

    run/
      config.resolved.json   manifest.json   [FAILED]
      store/<dataset>/...               ingested records
      indexes/<corpus>/...              embedding shards + manifest
      reports/similarity/*.json|csv     SimilarityReport records
      results/*.json|csv                per-model task results
      tables/*.csv|txt                  correlation tables
      figures/*.csv|json                plot-ready series
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from pathlib import Path

import numpy as np

from .. import __version__
from ..corpus import REFERENCE_CORPUS, TASK_DATASET, CorpusStore, DatasetHandle, sample
from ..embed import aggregate as embed_aggregate
from ..embed import build_shards, load_manifest, scan
from ..errors import ComputeError, ConfigError, SimbenchError, ValidationFailure
from ..interchange import iter_embeddings, load_embeddings, read_scores
from ..mauve import average_mauve
from ..ngram import (
    BIGRAM_HASHED,
    UNIGRAM_EXPLICIT,
    Vocabulary,
    WhitespaceTokenizer,
    build_distribution,
    kl_divergence,
)
from ..scoring import TaskResult, evaluate_task, perplexity_features
from ..stats import (
    METRIC_DIRECTIONS,
    PairedSeries,
    build_table,
    cross_correlation_table,
    render_table_csv,
    render_table_text,
)
from ..util import derive_seed, fmt_float, write_json
from .config import (
    COSINE_METRICS,
    EXAMPLE_SCALE_METRICS,
    INPUT_PPL,
    MAUVE,
    MAX_COSINE,
    MEAN_TOP1000_COSINE,
    PPL_METRICS,
    RunConfig,
    TARGET_PPL,
    UNIGRAM_KL,
    BIGRAM_KL,
    validate_config,
)

log = logging.getLogger(__name__)

STAGES = ("ingest", "index", "measure", "evaluate", "correlate", "figures")
_SAFE_NAME = re.compile(r"[^A-Za-z0-9._-]+")


def safe_name(name: str) -> str:
    return _SAFE_NAME.sub("_", name)


class RunDirectory:
    def __init__(self, root: Path | str):
        self.root = Path(root)

    @property
    def config_path(self) -> Path:
        return self.root / "config.resolved.json"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def failed_marker(self) -> Path:
        return self.root / "FAILED"

    def subdir(self, *parts: str) -> Path:
        p = self.root.joinpath(*parts)
        p.mkdir(parents=True, exist_ok=True)
        return p

    def store(self) -> CorpusStore:
        return CorpusStore(self.subdir("store"))

    def init(self, config: RunConfig) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        write_json(self.config_path, config.canonical())
        write_json(
            self.manifest_path,
            {"config_hash": config.hash, "seed": config.seed, "version": __version__, "stages": {}},
        )

    def load_config(self) -> RunConfig:
        if not self.config_path.exists():
            raise ConfigError(f"{self.root}: not a run directory (no config.resolved.json)")
        return RunConfig.model_validate(json.loads(self.config_path.read_text(encoding="utf-8")))

    def mark_stage(self, stage: str, status: str) -> None:
        manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        manifest["stages"][stage] = status
        write_json(self.manifest_path, manifest)


def write_csv(path: Path, header: list[str], rows: list[list], config_hash: str | None = None) -> None:
    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_csv_rows(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


# ---------------------------------------------------------------- ingest


def stage_ingest(run: RunDirectory, config: RunConfig) -> dict[str, DatasetHandle]:
    store = run.store()
    handles: dict[str, DatasetHandle] = {}
    for corpus in config.reference_corpora:
        handles[corpus.name] = store.ingest(corpus.path, REFERENCE_CORPUS, name=corpus.name)
    for task in config.task_datasets:
        handles[task.name] = store.ingest(task.path, TASK_DATASET, name=task.name)
    return handles


# ----------------------------------------------------------------- index


def stage_index(run: RunDirectory, config: RunConfig) -> None:
    if not any(m in COSINE_METRICS for m in config.metrics):
        return
    for corpus in config.reference_corpora:
        out_dir = run.subdir("indexes", safe_name(corpus.name))
        _, rows = iter_embeddings(corpus.embeddings)
        build_shards(rows, out_dir, shard_size=config.shard_size)
        log.info("indexed corpus '%s'", corpus.name)


# --------------------------------------------------------------- measure


def _report_name(task: str, corpus: str, metric: str, model: str | None = None) -> str:
    parts = [safe_name(task), safe_name(corpus), metric]
    if model is not None:
        parts.append(safe_name(model))
    return "__".join(parts)


def _write_similarity_report(
    run: RunDirectory,
    config: RunConfig,
    task: str,
    corpus: str,
    metric: str,
    value: float,
    model: str | None = None,
    std: float | None = None,
    per_repeat: list[float] | None = None,
    examples: dict[str, float] | None = None,
    params: dict | None = None,
) -> None:
    out_dir = run.subdir("reports", "similarity")
    name = _report_name(task, corpus, metric, model)
    report = {
        "task": task,
        "corpus": corpus,
        "metric": metric,
        "model": model,
        "scale": "aggregate+example" if examples else "aggregate",
        "value": value,
        "std": std,
        "per_repeat": per_repeat,
        "n_examples": len(examples) if examples else None,
        "direction": METRIC_DIRECTIONS.get(metric, "?"),
        "params": params or {},
        "config_hash": config.hash,
        "seed": config.seed,
    }
    write_json(out_dir / f"{name}.json", report)
    if examples:
        write_csv(
            out_dir / f"{name}.examples.csv",
            ["example_id", "value"],
            [[ex_id, examples[ex_id]] for ex_id in sorted(examples)],
            config_hash=config.hash,
        )


def load_similarity_report(run: RunDirectory, task: str, corpus: str, metric: str, model: str | None = None) -> dict:
    path = run.subdir("reports", "similarity") / f"{_report_name(task, corpus, metric, model)}.json"
    if not path.exists():
        raise ComputeError("correlate", f"missing similarity report {path.name}; run measure first")
    return json.loads(path.read_text(encoding="utf-8"))


def load_similarity_examples(
    run: RunDirectory, task: str, corpus: str, metric: str, model: str | None = None
) -> dict[str, float]:
    path = run.subdir("reports", "similarity") / f"{_report_name(task, corpus, metric, model)}.examples.csv"
    if not path.exists():
        raise ComputeError("figures", f"missing example-scale report {path.name}")
    out: dict[str, float] = {}
    for row in read_csv_rows(path):
        out[row["example_id"]] = float(row["value"])
    return out


def _std_or_none(values: list[float]) -> float | None:
    return float(np.std(values, ddof=1)) if len(values) > 1 else None


def _task_embeddings(task_spec, store: CorpusStore) -> tuple[list[str], np.ndarray]:
    """Embeddings for exactly the task's example ids, in sorted id order."""
    handle = store.handle(task_spec.name)
    wanted = {d.id for d in store.documents(handle)}
    _, ids, matrix = load_embeddings(task_spec.embeddings)
    by_id = {doc_id: i for i, doc_id in enumerate(ids)}
    missing = sorted(wanted - by_id.keys())
    if missing:
        raise ValidationFailure(
            f"task '{task_spec.name}': embeddings missing for ids {missing[:5]}"
            + (" ..." if len(missing) > 5 else "")
        )
    extra = len(ids) - len(wanted & by_id.keys())
    if extra:
        log.warning("task '%s': %d embedding rows not in the task are ignored", task_spec.name, extra)
    order = sorted(wanted)
    return order, matrix[[by_id[i] for i in order]]


def _measure_kl(run: RunDirectory, config: RunConfig, scheme_metric: str) -> None:
    scheme = UNIGRAM_EXPLICIT if scheme_metric == UNIGRAM_KL else BIGRAM_HASHED
    tokenizer = WhitespaceTokenizer()
    store = run.store()
    for corpus in config.reference_corpora:
        corpus_handle = store.handle(corpus.name)
        ref_samples = [
            sample(
                corpus_handle,
                config.kl_sample_size,
                seed=derive_seed(config.seed, "kl-sample", corpus.name, r),
            )
            for r in range(config.repeats)
        ]
        bigram_refs = (
            [build_distribution(docs, scheme, tokenizer) for docs in ref_samples]
            if scheme == BIGRAM_HASHED
            else None
        )
        for task in config.task_datasets:
            task_docs = store.documents(store.handle(task.name))
            values = []
            for r, ref_docs in enumerate(ref_samples):
                if scheme == UNIGRAM_EXPLICIT:
                    vocab = Vocabulary.from_documents([task_docs, ref_docs], tokenizer)
                    p = build_distribution(task_docs, scheme, tokenizer, vocab=vocab)
                    q = build_distribution(ref_docs, scheme, tokenizer, vocab=vocab)
                else:
                    p = build_distribution(task_docs, scheme, tokenizer)
                    q = bigram_refs[r]
                values.append(kl_divergence(p, q, epsilon=config.epsilon))
            _write_similarity_report(
                run, config, task.name, corpus.name, scheme_metric,
                value=float(np.mean(values)), std=_std_or_none(values), per_repeat=values,
                params={
                    "kl_direction": "task||reference",
                    "epsilon": config.epsilon,
                    "sample_size": min(config.kl_sample_size, corpus_handle.example_count),
                    "tokenizer_id": tokenizer.id,
                },
            )


def _measure_cosine(run: RunDirectory, config: RunConfig) -> None:
    wanted = [m for m in config.metrics if m in COSINE_METRICS]
    store = run.store()
    for corpus in config.reference_corpora:
        manifest = load_manifest(run.subdir("indexes", safe_name(corpus.name)))
        for task in config.task_datasets:
            ids, queries = _task_embeddings(task, store)
            norms = np.linalg.norm(queries.astype(np.float64), axis=1, keepdims=True)
            if np.any(norms == 0):
                raise ValidationFailure(f"task '{task.name}': zero query embedding")
            results = scan(
                queries.astype(np.float64) / norms, ids, manifest,
                k=config.top_k, workers=config.scan_workers,
            )
            mean_max, mean_mean = embed_aggregate(results)
            k_used = results[0].k_used
            if MAX_COSINE in wanted:
                _write_similarity_report(
                    run, config, task.name, corpus.name, MAX_COSINE,
                    value=mean_max,
                    examples={r.query_id: r.max_sim for r in results},
                    params={"k": config.top_k, "k_used": k_used},
                )
            if MEAN_TOP1000_COSINE in wanted:
                _write_similarity_report(
                    run, config, task.name, corpus.name, MEAN_TOP1000_COSINE,
                    value=mean_mean,
                    examples={r.query_id: r.mean_top_k for r in results},
                    params={"k": config.top_k, "k_used": k_used},
                )


def _measure_mauve(run: RunDirectory, config: RunConfig) -> None:
    store = run.store()
    for corpus in config.reference_corpora:
        _, _, ref_matrix = load_embeddings(corpus.embeddings)
        for task in config.task_datasets:
            _, task_matrix = _task_embeddings(task, store)
            result = average_mauve(
                task_matrix,
                ref_matrix,
                sample_size=config.mauve_sample_size,
                repeats=config.repeats,
                seed=derive_seed(config.seed, "mauve", corpus.name, task.name),
                k=config.mauve_num_clusters,
                c=config.mauve_scaling_c,
                num_points=config.mauve_num_points,
            )
            _write_similarity_report(
                run, config, task.name, corpus.name, MAUVE,
                value=result.mean_score,
                std=_std_or_none(list(result.per_repeat)),
                per_repeat=list(result.per_repeat),
                params={
                    "sample_size": result.sample_size,
                    "c": config.mauve_scaling_c,
                    "num_points": config.mauve_num_points,
                },
            )


def _scores_for_ppl(model) -> dict[str, "ScoresRef"]:
    """Pick one scores file per task for perplexity features: fewest shots wins."""
    chosen = {}
    for ref in sorted(model.scores, key=lambda r: (r.task, r.shots)):
        if ref.task not in chosen:
            chosen[ref.task] = ref
    return chosen


def _measure_ppl(run: RunDirectory, config: RunConfig) -> None:
    wanted = [m for m in config.metrics if m in PPL_METRICS]
    for model in config.models:
        for task_name, ref in sorted(_scores_for_ppl(model).items()):
            header, records = read_scores(ref.path)
            feats = perplexity_features(records)
            per_metric = {
                INPUT_PPL: (feats.mean_input_logloss, dict(zip(feats.example_ids, feats.input_logloss))),
                TARGET_PPL: (feats.mean_target_logloss, dict(zip(feats.example_ids, feats.target_logloss))),
            }
            for metric in wanted:
                value, examples = per_metric[metric]
                _write_similarity_report(
                    run, config, task_name, model.corpus, metric,
                    value=value, model=model.model_id, examples=examples,
                    params={"shots_used": ref.shots, "unit": "nats/token", "tokenizer_id": header["tokenizer_id"]},
                )


def stage_measure(run: RunDirectory, config: RunConfig) -> None:
    if UNIGRAM_KL in config.metrics:
        _measure_kl(run, config, UNIGRAM_KL)
    if BIGRAM_KL in config.metrics:
        _measure_kl(run, config, BIGRAM_KL)
    if any(m in COSINE_METRICS for m in config.metrics):
        _measure_cosine(run, config)
    if MAUVE in config.metrics:
        _measure_mauve(run, config)
    if any(m in PPL_METRICS for m in config.metrics):
        _measure_ppl(run, config)


# -------------------------------------------------------------- evaluate


def _result_name(task: str, model: str, shots: int) -> str:
    return f"{safe_name(task)}__{safe_name(model)}__{shots}shot"


def stage_evaluate(run: RunDirectory, config: RunConfig) -> None:
    store = run.store()
    out_dir = run.subdir("results")
    for model in config.models:
        for ref in sorted(model.scores, key=lambda r: (r.task, r.shots)):
            header, records = read_scores(ref.path)
            if header["model_id"] != model.model_id:
                raise ValidationFailure(
                    f"scores file {ref.path}: header model '{header['model_id']}' != configured '{model.model_id}'"
                )
            if header.get("shots", ref.shots) != ref.shots:
                raise ValidationFailure(
                    f"scores file {ref.path}: header says {header.get('shots')} shots, config says {ref.shots}"
                )
            handle = store.handle(ref.task)
            examples = store.task_examples(handle)
            result = evaluate_task(
                task=ref.task,
                model_id=model.model_id,
                shots=ref.shots,
                examples=examples,
                scores={r.example_id: r for r in records},
                baseline=handle.num_choices_baseline,
                length_normalized=config.length_normalized_scoring,
            )
            name = _result_name(ref.task, model.model_id, ref.shots)
            write_json(
                out_dir / f"{name}.json",
                {
                    "task": result.task,
                    "model": result.model_id,
                    "shots": result.shots,
                    "accuracy": result.accuracy,
                    "normalized_score": result.normalized_score,
                    "baseline": result.baseline,
                    "n_examples": len(result.per_example),
                    "length_normalized": config.length_normalized_scoring,
                    "prompt_template": header.get("prompt_template"),
                    "tokenizer_id": header["tokenizer_id"],
                    "config_hash": config.hash,
                },
            )
            write_csv(
                out_dir / f"{name}.examples.csv",
                ["example_id", "predicted_index", "correct"],
                [[o.example_id, o.predicted_index, int(o.correct)] for o in result.per_example],
                config_hash=config.hash,
            )


def load_task_result(run: RunDirectory, task: str, model: str, shots: int) -> dict:
    path = run.subdir("results") / f"{_result_name(task, model, shots)}.json"
    if not path.exists():
        raise ComputeError("correlate", f"missing task result {path.name}; run evaluate first")
    return json.loads(path.read_text(encoding="utf-8"))


def load_task_outcomes(run: RunDirectory, task: str, model: str, shots: int) -> TaskResult:
    meta = load_task_result(run, task, model, shots)
    path = run.subdir("results") / f"{_result_name(task, model, shots)}.examples.csv"
    from ..scoring import ExampleOutcome

    outcomes = []
    for row in read_csv_rows(path):
        outcomes.append(
            ExampleOutcome(
                example_id=row["example_id"],
                predicted_index=int(row["predicted_index"]),
                correct=bool(int(row["correct"])),
            )
        )
    return TaskResult(
        task=meta["task"], model_id=meta["model"], shots=meta["shots"],
        per_example=tuple(outcomes), accuracy=meta["accuracy"],
        normalized_score=meta["normalized_score"], baseline=meta["baseline"],
    )


# ------------------------------------------------------------- correlate


def _model_shot_pairs(config: RunConfig) -> list[tuple]:
    pairs = []
    for model in config.models:
        for shots in sorted({ref.shots for ref in model.scores}):
            pairs.append((model, shots))
    return pairs


def _similarity_series(run: RunDirectory, config: RunConfig, metric: str, model) -> dict[str, float]:
    """Aggregate similarity value per task for one (metric, model) pairing."""
    values = {}
    for task in config.task_datasets:
        report = load_similarity_report(
            run, task.name, model.corpus, metric, model.model_id if metric in PPL_METRICS else None
        )
        values[task.name] = report["value"]
    return values


def _write_table(base: Path, table, config_hash: str) -> None:
    csv_text = f"# config_hash={config_hash}\n" + render_table_csv(table)
    base.with_suffix(".csv").write_text(csv_text, encoding="utf-8", newline="")
    txt = render_table_text(table) + f"config_hash: {config_hash}\n"
    base.with_suffix(".txt").write_text(txt, encoding="utf-8", newline="")


def stage_correlate(run: RunDirectory, config: RunConfig) -> None:
    out_dir = run.subdir("tables")
    pairs = _model_shot_pairs(config)

    for method in config.correlation.methods:
        if pairs:
            cells = {}
            for model, shots in pairs:
                scored_tasks = {ref.task for ref in model.scores if ref.shots == shots}
                for metric in config.metrics:
                    sims = _similarity_series(run, config, metric, model)
                    labels = sorted(set(sims) & scored_tasks)
                    excluded = sorted(set(sims) ^ scored_tasks)
                    if excluded:
                        log.warning(
                            "cell (%s, %s, %d-shot): excluding tasks without both values: %s",
                            metric, model.model_id, shots, excluded,
                        )
                    if len(labels) < 3:
                        cells[(metric, model.model_id, shots)] = None
                        continue
                    y = [load_task_result(run, t, model.model_id, shots)["normalized_score"] for t in labels]
                    cells[(metric, model.model_id, shots)] = PairedSeries(
                        labels=tuple(labels), x=tuple(sims[t] for t in labels), y=tuple(y)
                    )
            table = build_table(
                cells,
                alpha=config.alpha,
                method=method,
                p_mode=config.correlation.p_mode,
                permutation_iterations=config.correlation.permutation_iterations,
                seed=config.seed,
            )
            _write_table(out_dir / f"performance_{method}", table, config.hash)

        # metric-vs-metric cross correlation, one family per corpus
        for corpus in config.reference_corpora:
            metric_values: dict[str, dict[str, float]] = {}
            for metric in config.metrics:
                if metric in PPL_METRICS:
                    corpus_models = sorted(
                        (m for m in config.models if m.corpus == corpus.name), key=lambda m: m.model_id
                    )
                    if not corpus_models:
                        continue
                    chosen = corpus_models[0]
                    if len(corpus_models) > 1:
                        log.info(
                            "cross table for '%s': using %s for %s", corpus.name, chosen.model_id, metric
                        )
                    metric_values[metric] = _similarity_series(run, config, metric, chosen)
                else:
                    metric_values[metric] = {
                        task.name: load_similarity_report(run, task.name, corpus.name, metric)["value"]
                        for task in config.task_datasets
                    }
            if len(metric_values) < 2:
                continue
            table = cross_correlation_table(
                metric_values,
                alpha=config.alpha,
                method=method,
                p_mode=config.correlation.p_mode,
                permutation_iterations=config.correlation.permutation_iterations,
                seed=config.seed,
            )
            name = f"metric_cross_{safe_name(corpus.name)}_{method}"
            _write_table(out_dir / name, table, config.hash)


# --------------------------------------------------------------- figures


def _five_number_summary(values: list[float]) -> dict:
    if not values:
        return {"count": 0}
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = (float(np.quantile(arr, q)) for q in (0.25, 0.5, 0.75))
    return {
        "count": int(arr.size),
        "min": float(arr.min()),
        "q1": q1,
        "median": med,
        "q3": q3,
        "max": float(arr.max()),
    }


def stage_figures(run: RunDirectory, config: RunConfig) -> None:
    from ..scoring import split_correct

    out_dir = run.subdir("figures")
    pairs = _model_shot_pairs(config)

    # similarity-vs-performance scatter, one series per (model, shots, metric)
    for model, shots in pairs:
        scored_tasks = sorted({ref.task for ref in model.scores if ref.shots == shots})
        for metric in config.metrics:
            sims = _similarity_series(run, config, metric, model)
            rows = []
            for task_name in scored_tasks:
                if task_name not in sims:
                    continue
                report = load_similarity_report(
                    run, task_name, model.corpus, metric, model.model_id if metric in PPL_METRICS else None
                )
                result = load_task_result(run, task_name, model.model_id, shots)
                rows.append(
                    [
                        task_name,
                        report["value"],
                        report["std"] if report["std"] is not None else "",
                        result["accuracy"],
                        result["normalized_score"],
                    ]
                )
            write_csv(
                out_dir / f"scatter_{metric}__{safe_name(model.model_id)}__{shots}shot.csv",
                ["task", "similarity", "similarity_std", "accuracy", "normalized_score"],
                rows,
                config_hash=config.hash,
            )

    # titration series: similarity and accuracy as a function of fraction
    for series in config.titration_series:
        for metric in [m for m in config.metrics if m not in PPL_METRICS]:
            for corpus in config.reference_corpora:
                rows = []
                for member in series.members:
                    report = load_similarity_report(run, member.task, corpus.name, metric)
                    rows.append([member.fraction, member.task, report["value"],
                                 report["std"] if report["std"] is not None else ""])
                write_csv(
                    out_dir / f"titration_{safe_name(series.name)}__{safe_name(corpus.name)}__{metric}.csv",
                    ["fraction", "task", "similarity", "similarity_std"],
                    rows,
                    config_hash=config.hash,
                )
        for model, shots in pairs:
            scored = {ref.task for ref in model.scores if ref.shots == shots}
            if not all(member.task in scored for member in series.members):
                continue
            rows = []
            for member in series.members:
                result = load_task_result(run, member.task, model.model_id, shots)
                rows.append([member.fraction, member.task, result["accuracy"], result["normalized_score"]])
            write_csv(
                out_dir / f"titration_{safe_name(series.name)}__{safe_name(model.model_id)}__{shots}shot.csv",
                ["fraction", "task", "accuracy", "normalized_score"],
                rows,
                config_hash=config.hash,
            )

    # correctness split: similarity distributions and quartile accuracies
    example_metrics = [m for m in config.metrics if m in EXAMPLE_SCALE_METRICS]
    for model, shots in pairs:
        for ref in sorted(model.scores, key=lambda r: (r.task, r.shots)):
            if ref.shots != shots:
                continue
            result = load_task_outcomes(run, ref.task, model.model_id, shots)
            for metric in example_metrics:
                sims = load_similarity_examples(
                    run, ref.task, model.corpus, metric, model.model_id if metric in PPL_METRICS else None
                )
                split = split_correct(result, sims)
                name = f"{safe_name(ref.task)}__{safe_name(model.model_id)}__{shots}shot__{metric}"
                write_json(
                    out_dir / f"correctness_{name}.json",
                    {
                        "task": ref.task,
                        "model": model.model_id,
                        "shots": shots,
                        "metric": metric,
                        "correct": _five_number_summary(list(split.correct_values)),
                        "incorrect": _five_number_summary(list(split.incorrect_values)),
                        "config_hash": config.hash,
                    },
                )
                write_csv(
                    out_dir / f"quartiles_{name}.csv",
                    ["quartile", "accuracy", "size"],
                    [
                        [i + 1, "" if math.isnan(acc) else acc, size]
                        for i, (acc, size) in enumerate(zip(split.quartile_accuracies, split.quartile_sizes))
                    ],
                    config_hash=config.hash,
                )


# ---------------------------------------------------------------- run-all


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "index": stage_index,
    "measure": stage_measure,
    "evaluate": stage_evaluate,
    "correlate": stage_correlate,
    "figures": stage_figures,
}


def run_stage(run: RunDirectory, stage: str) -> None:
    config = run.load_config()
    _STAGE_FUNCS[stage](run, config)
    run.mark_stage(stage, "ok")


def run_all(config: RunConfig, out_dir: Path | str) -> RunDirectory:
    """Validate, then execute every stage; partial outputs are kept and a
    FAILED marker names the failing stage."""
    validate_config(config)
    run = RunDirectory(out_dir)
    run.init(config)
    for stage in STAGES:
        try:
            _STAGE_FUNCS[stage](run, config)
        except SimbenchError as e:
            run.mark_stage(stage, f"failed: {e}")
            run.failed_marker.write_text(f"{stage}: {e}\n", encoding="utf-8")
            raise ComputeError(stage, str(e)) from e
        run.mark_stage(stage, "ok")
    return run
