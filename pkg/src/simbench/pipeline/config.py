"""Declarative run configuration.

One JSON document drives a whole run: which corpora and task datasets to
ingest, which similarity metrics to compute, which model score files feed
evaluation, and the statistical settings for the correlation tables. Paths
may be relative; they are resolved against the directory of the config file
(or an explicit base directory) at load time. The canonical JSON of the
resolved config is hashed and stamped into every artifact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, ValidationError

from ..errors import ConfigError
from ..util import config_hash

UNIGRAM_KL = "unigram_kl"
BIGRAM_KL = "bigram_kl"
MAX_COSINE = "max_cosine"
MEAN_TOP1000_COSINE = "mean_top1000_cosine"
MAUVE = "mauve"
INPUT_PPL = "input_ppl"
TARGET_PPL = "target_ppl"

ALL_METRICS = (UNIGRAM_KL, BIGRAM_KL, MAX_COSINE, MEAN_TOP1000_COSINE, MAUVE, INPUT_PPL, TARGET_PPL)
EMBEDDING_METRICS = (MAX_COSINE, MEAN_TOP1000_COSINE, MAUVE)
COSINE_METRICS = (MAX_COSINE, MEAN_TOP1000_COSINE)
PPL_METRICS = (INPUT_PPL, TARGET_PPL)
SAMPLED_METRICS = (UNIGRAM_KL, BIGRAM_KL, MAUVE)  # carry error bars over reference samples
EXAMPLE_SCALE_METRICS = (MAX_COSINE, MEAN_TOP1000_COSINE, INPUT_PPL, TARGET_PPL)


class CorpusSpec(BaseModel):
    name: str
    path: str
    embeddings: Optional[str] = None  # probe embedding file for the whole corpus


class TaskSpec(BaseModel):
    name: str
    path: str
    embeddings: Optional[str] = None  # probe embedding file for the task examples


class ScoresRef(BaseModel):
    task: str
    shots: int = 0
    path: str


class ModelSpec(BaseModel):
    model_id: str
    corpus: str  # reference corpus this model was pretrained on
    scores: list[ScoresRef] = Field(default_factory=list)


class TitrationMember(BaseModel):
    task: str
    fraction: float


class TitrationSeriesSpec(BaseModel):
    name: str
    language: str
    members: list[TitrationMember]


class CorrelationSettings(BaseModel):
    methods: list[str] = Field(default_factory=lambda: ["spearman"])
    p_mode: str = "analytic"  # analytic | permutation | auto
    permutation_iterations: int = 10_000


class RunConfig(BaseModel):
    reference_corpora: list[CorpusSpec]
    task_datasets: list[TaskSpec]
    metrics: list[str]
    models: list[ModelSpec] = Field(default_factory=list)

    kl_sample_size: int = 100_000
    mauve_sample_size: int = 10_000
    repeats: int = 5  # reference samples per sampled metric, for error bars
    top_k: int = 1000
    epsilon: float = 1e-9
    mauve_num_clusters: Optional[int] = None
    mauve_scaling_c: float = 5.0
    mauve_num_points: int = 25
    shard_size: int = 50_000
    scan_workers: int = 1
    length_normalized_scoring: bool = False  # per-token target scoring instead of total
    seed: int = 0
    alpha: float = 0.05
    correlation: CorrelationSettings = Field(default_factory=CorrelationSettings)
    titration_series: list[TitrationSeriesSpec] = Field(default_factory=list)

    def canonical(self) -> dict:
        return json.loads(self.model_dump_json())

    @property
    def hash(self) -> str:
        return config_hash(self.canonical())


def _resolve(path: str, base: Path) -> str:
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def resolve_paths(config: RunConfig, base: Path) -> RunConfig:
    config = config.model_copy(deep=True)
    for corpus in config.reference_corpora:
        corpus.path = _resolve(corpus.path, base)
        if corpus.embeddings:
            corpus.embeddings = _resolve(corpus.embeddings, base)
    for task in config.task_datasets:
        task.path = _resolve(task.path, base)
        if task.embeddings:
            task.embeddings = _resolve(task.embeddings, base)
    for model in config.models:
        for ref in model.scores:
            ref.path = _resolve(ref.path, base)
    return config


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg})") from e
    return parse_config(raw, base=path.parent)


def parse_config(raw: dict, base: Path | str = ".") -> RunConfig:
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {e}") from e
    return resolve_paths(config, Path(base))


def validate_config(config: RunConfig) -> None:
    """Cross-field checks that must all pass before any compute starts."""
    if not config.metrics:
        raise ConfigError("at least one metric is required")
    if not config.task_datasets:
        raise ConfigError("at least one task dataset is required")
    if not config.reference_corpora:
        raise ConfigError("at least one reference corpus is required")
    unknown = [m for m in config.metrics if m not in ALL_METRICS]
    if unknown:
        raise ConfigError(f"unknown metrics: {unknown} (valid: {list(ALL_METRICS)})")
    if len(set(config.metrics)) != len(config.metrics):
        raise ConfigError("duplicate metrics in config")

    corpus_names = [c.name for c in config.reference_corpora]
    task_names = [t.name for t in config.task_datasets]
    for group, names in (("corpus", corpus_names), ("task", task_names)):
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate {group} names")
    if set(corpus_names) & set(task_names):
        raise ConfigError("corpus and task names must not overlap")

    for corpus in config.reference_corpora:
        if not Path(corpus.path).exists():
            raise ConfigError(f"corpus '{corpus.name}': file not found: {corpus.path}")
        if corpus.embeddings and not Path(corpus.embeddings).exists():
            raise ConfigError(f"corpus '{corpus.name}': embeddings not found: {corpus.embeddings}")
    for task in config.task_datasets:
        if not Path(task.path).exists():
            raise ConfigError(f"task '{task.name}': file not found: {task.path}")
        if task.embeddings and not Path(task.embeddings).exists():
            raise ConfigError(f"task '{task.name}': embeddings not found: {task.embeddings}")

    needs_embeddings = [m for m in config.metrics if m in EMBEDDING_METRICS]
    if needs_embeddings:
        for corpus in config.reference_corpora:
            if not corpus.embeddings:
                raise ConfigError(
                    f"metrics {needs_embeddings} need embeddings for corpus '{corpus.name}'"
                )
        for task in config.task_datasets:
            if not task.embeddings:
                raise ConfigError(f"metrics {needs_embeddings} need embeddings for task '{task.name}'")

    needs_scores = [m for m in config.metrics if m in PPL_METRICS]
    if needs_scores and not config.models:
        raise ConfigError(f"metrics {needs_scores} need model score files, but no models are configured")

    for model in config.models:
        if model.corpus not in corpus_names:
            raise ConfigError(f"model '{model.model_id}': unknown corpus '{model.corpus}'")
        seen: set[tuple[str, int]] = set()
        for ref in model.scores:
            if ref.task not in task_names:
                raise ConfigError(f"model '{model.model_id}': scores reference unknown task '{ref.task}'")
            if (ref.task, ref.shots) in seen:
                raise ConfigError(
                    f"model '{model.model_id}': duplicate scores for task '{ref.task}' at {ref.shots} shots"
                )
            seen.add((ref.task, ref.shots))
            if not Path(ref.path).exists():
                raise ConfigError(f"model '{model.model_id}': scores file not found: {ref.path}")
        if needs_scores and not model.scores:
            raise ConfigError(
                f"metrics {needs_scores} requested but model '{model.model_id}' has no score files"
            )

    for series in config.titration_series:
        fractions = [m.fraction for m in series.members]
        if sorted(fractions) != fractions or len(set(fractions)) != len(fractions):
            raise ConfigError(f"titration series '{series.name}': fractions must be strictly increasing")
        for member in series.members:
            if member.task not in task_names:
                raise ConfigError(f"titration series '{series.name}': unknown task '{member.task}'")

    if config.repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if config.top_k < 1:
        raise ConfigError("top_k must be >= 1")
    if config.epsilon <= 0:
        raise ConfigError("epsilon must be > 0")
    if not 0 < config.alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    if config.correlation.p_mode not in ("analytic", "permutation", "auto"):
        raise ConfigError(f"unknown p_mode '{config.correlation.p_mode}'")
    for method in config.correlation.methods:
        if method not in ("spearman", "pearson"):
            raise ConfigError(f"unknown correlation method '{method}'")
