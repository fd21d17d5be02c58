"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel

from ..pipeline.config import RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
    kind: str  # "validation" | "compute"
    stage: Optional[str] = None


class IngestRequest(BaseModel):
    path: str
    kind: str  # reference_corpus | task_dataset
    store_dir: str
    name: Optional[str] = None


class IngestResponse(BaseModel):
    name: str
    kind: str
    example_count: int
    num_choices_baseline: Optional[float] = None
    records_path: str


class EmbedIndexRequest(BaseModel):
    embeddings_path: str
    out_dir: str
    shard_size: int = 50_000


class EmbedIndexResponse(BaseModel):
    manifest_path: str
    dim: int
    total_count: int
    num_shards: int


class TitrateRequest(BaseModel):
    source_path: str
    target_path: str
    out_dir: str
    language: str
    fractions: Optional[list[float]] = None
    boundary_unit: str = "whitespace_token"
    splice_targets: bool = False


class TitrateResponse(BaseModel):
    language: str
    fractions: list[float]
    datasets: list[str]
    manifest_path: str


class RunRequest(BaseModel):
    """Start or extend a run directory.

    Exactly one of ``config`` (inline) or ``config_path`` (server-side file)
    must be provided for verbs that initialize a run; verbs acting on an
    existing run directory need only ``out_dir``.
    """

    out_dir: str
    config: Optional[RunConfig] = None
    config_path: Optional[str] = None
    config_base: Optional[str] = None  # base dir for relative paths in inline configs


class RunResponse(BaseModel):
    run_dir: str
    config_hash: str
    stages: dict[str, str]
