"""HTTP service exposing the measurement pipeline.

The service owns all computation; clients (including the bundled CLI) only
move requests and responses. Stage verbs operate on server-side paths: a
run directory is created by ``measure``/``evaluate``/``run-all`` from a
config, and later verbs read artifacts back from it.

Validation problems map to HTTP 400, compute failures to HTTP 500; both
carry a structured body naming the kind (and stage when known).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..corpus import CorpusStore
from ..embed import build_shards, load_manifest
from ..errors import ComputeError, ConfigError, SimbenchError, ValidationFailure
from ..interchange import iter_embeddings
from ..pipeline import RunConfig, load_config, run_all, validate_config
from ..pipeline.config import resolve_paths
from ..pipeline.stages import RunDirectory, run_stage
from ..titration import TitrationSpec, build_titration_series
from .models import (
    EmbedIndexRequest,
    EmbedIndexResponse,
    HealthResponse,
    IngestRequest,
    IngestResponse,
    RunRequest,
    RunResponse,
    TitrateRequest,
    TitrateResponse,
)

log = logging.getLogger(__name__)


def _error_payload(exc: SimbenchError) -> tuple[int, dict]:
    if isinstance(exc, ComputeError):
        return 500, {"error": str(exc), "kind": "compute", "stage": exc.stage}
    return 400, {"error": str(exc), "kind": "validation", "stage": None}


def _resolve_run_config(request: RunRequest) -> RunConfig:
    if (request.config is None) == (request.config_path is None):
        raise ConfigError("provide exactly one of 'config' or 'config_path'")
    if request.config_path is not None:
        return load_config(request.config_path)
    return resolve_paths(request.config, Path(request.config_base or "."))


def _init_run(request: RunRequest) -> tuple[RunDirectory, RunConfig]:
    run = RunDirectory(request.out_dir)
    if request.config is None and request.config_path is None:
        return run, run.load_config()  # raises if out_dir is not a run directory
    config = _resolve_run_config(request)
    validate_config(config)
    run.init(config)
    return run, config


def _run_response(run: RunDirectory) -> RunResponse:
    manifest = json.loads(run.manifest_path.read_text(encoding="utf-8"))
    return RunResponse(
        run_dir=str(run.root), config_hash=manifest["config_hash"], stages=manifest["stages"]
    )


def create_app() -> FastAPI:
    app = FastAPI(title="simbench", version=__version__)

    @app.exception_handler(SimbenchError)
    async def simbench_error_handler(request: Request, exc: SimbenchError):
        status, payload = _error_payload(exc)
        return JSONResponse(status_code=status, content=payload)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(request: IngestRequest):
        if request.kind not in ("reference_corpus", "task_dataset"):
            raise ValidationFailure(f"unknown dataset kind '{request.kind}'")
        store = CorpusStore(request.store_dir)
        handle = store.ingest(request.path, request.kind, name=request.name)
        return IngestResponse(
            name=handle.name,
            kind=handle.kind,
            example_count=handle.example_count,
            num_choices_baseline=handle.num_choices_baseline,
            records_path=str(handle.path),
        )

    @app.post("/embed-index", response_model=EmbedIndexResponse)
    def embed_index(request: EmbedIndexRequest):
        _, rows = iter_embeddings(request.embeddings_path)
        manifest_path = build_shards(rows, request.out_dir, shard_size=request.shard_size)
        manifest = load_manifest(manifest_path)
        return EmbedIndexResponse(
            manifest_path=str(manifest_path),
            dim=manifest["dim"],
            total_count=manifest["total_count"],
            num_shards=len(manifest["shards"]),
        )

    @app.post("/titrate", response_model=TitrateResponse)
    def titrate(request: TitrateRequest):
        spec = TitrationSpec(
            fractions=tuple(request.fractions) if request.fractions else TitrationSpec().fractions,
            boundary_unit=request.boundary_unit,
        )
        series = build_titration_series(
            request.source_path,
            request.target_path,
            request.out_dir,
            language=request.language,
            spec=spec,
            splice_targets=request.splice_targets,
        )
        return TitrateResponse(
            language=series.language,
            fractions=list(series.fractions),
            datasets=[str(p) for p in series.datasets],
            manifest_path=str(series.manifest_path),
        )

    @app.post("/run-all", response_model=RunResponse)
    def run_all_endpoint(request: RunRequest):
        config = _resolve_run_config(request)
        run = run_all(config, request.out_dir)
        return _run_response(run)

    def _stage_endpoint(stage: str, prerequisites: tuple[str, ...]):
        def endpoint(request: RunRequest):
            run, config = _init_run(request)
            manifest = json.loads(run.manifest_path.read_text(encoding="utf-8"))
            for pre in prerequisites:
                if manifest["stages"].get(pre) != "ok":
                    run_stage(run, pre)
            run_stage(run, stage)
            return _run_response(run)

        endpoint.__name__ = f"{stage}_endpoint"
        return endpoint

    # measure/evaluate bootstrap their in-run prerequisites; correlate and
    # figures require the earlier stages' artifacts to exist already
    app.post("/measure", response_model=RunResponse)(_stage_endpoint("measure", ("ingest", "index")))
    app.post("/evaluate", response_model=RunResponse)(_stage_endpoint("evaluate", ("ingest",)))
    app.post("/correlate", response_model=RunResponse)(_stage_endpoint("correlate", ()))
    app.post("/figures", response_model=RunResponse)(_stage_endpoint("figures", ()))

    return app


app = create_app()
