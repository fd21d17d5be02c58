"""File formats exchanged with the model probe.

Model-derived inputs (embeddings, per-target log-probabilities) are computed
once by an external probe process and arrive as line-delimited JSON. The
first line is a header stamping schema name, version, and model/tokenizer
identity; every following line is one record. Embedding vectors travel as
base64-encoded little-endian float32.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DimensionMismatchError, IngestError, ValidationFailure

EMBEDDINGS_SCHEMA = "simbench-embeddings"
SCORES_SCHEMA = "simbench-scores"
SCHEMA_VERSION = 1


def encode_vector(vec: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(vec, dtype="<f4").tobytes()).decode("ascii")


def decode_vector(data: str, dim: int) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"))
    vec = np.frombuffer(raw, dtype="<f4")
    if vec.shape[0] != dim:
        raise DimensionMismatchError(f"vector has {vec.shape[0]} dims, header says {dim}")
    return vec


def _read_header(path: Path, schema: str) -> tuple[dict, "Iterator[tuple[int, dict]]"]:
    f = open(path, "r", encoding="utf-8")
    first = f.readline()
    if first == "":
        f.close()
        raise IngestError(f"{path}: empty file")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as e:
        f.close()
        raise IngestError(f"{path}: invalid header ({e.msg})", line=1) from e
    if header.get("schema") != schema:
        f.close()
        raise IngestError(f"{path}: expected schema '{schema}', got {header.get('schema')!r}", line=1)
    if header.get("version") != SCHEMA_VERSION:
        f.close()
        raise IngestError(f"{path}: unsupported schema version {header.get('version')!r}", line=1)

    def records() -> Iterator[tuple[int, dict]]:
        with f:
            for lineno, raw in enumerate(f, start=2):
                if raw.strip() == "":
                    continue
                try:
                    yield lineno, json.loads(raw)
                except json.JSONDecodeError as e:
                    raise IngestError(f"invalid JSON ({e.msg})", line=lineno) from e

    return header, records()


def iter_embeddings(path: Path | str) -> tuple[dict, Iterator[tuple[str, np.ndarray]]]:
    """Stream (doc_id, float32 vector) pairs; returns (header, iterator)."""
    path = Path(path)
    header, records = _read_header(path, EMBEDDINGS_SCHEMA)
    dim = header.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise IngestError(f"{path}: header is missing a positive 'dim'", line=1)

    def rows() -> Iterator[tuple[str, np.ndarray]]:
        for lineno, obj in records:
            doc_id = obj.get("doc_id")
            if not isinstance(doc_id, str) or doc_id == "":
                raise IngestError("missing 'doc_id'", line=lineno)
            if "vector" not in obj:
                raise IngestError("missing 'vector'", line=lineno)
            yield doc_id, decode_vector(obj["vector"], dim)

    return header, rows()


def load_embeddings(path: Path | str) -> tuple[dict, list[str], np.ndarray]:
    """Load a whole embedding file as (header, ids, float32 matrix)."""
    header, rows = iter_embeddings(path)
    ids: list[str] = []
    vecs: list[np.ndarray] = []
    for doc_id, vec in rows:
        ids.append(doc_id)
        vecs.append(vec)
    if not ids:
        raise IngestError(f"{path}: no embedding records")
    return header, ids, np.vstack(vecs)


def write_embeddings(
    path: Path | str,
    model_id: str,
    rows: Iterable[tuple[str, np.ndarray]],
    extra_header: dict | None = None,
) -> int:
    rows = list(rows)
    if not rows:
        raise ValidationFailure("no embedding rows to write")
    dim = int(np.asarray(rows[0][1]).shape[0])
    header = {"schema": EMBEDDINGS_SCHEMA, "version": SCHEMA_VERSION, "model_id": model_id, "dim": dim}
    header.update(extra_header or {})
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for doc_id, vec in rows:
            vec = np.asarray(vec)
            if vec.shape != (dim,):
                raise DimensionMismatchError(f"row '{doc_id}' has shape {vec.shape}, expected ({dim},)")
            f.write(json.dumps({"doc_id": doc_id, "vector": encode_vector(vec)}) + "\n")
    return len(rows)


@dataclass(frozen=True)
class ExampleScores:
    """Model outputs for one task example.

    ``target_logprobs`` holds the summed token log-probability of each
    candidate target conditioned on the assembled prompt; per-token losses
    are in nats/token and stay in log space.
    """

    example_id: str
    target_logprobs: tuple[float, ...]
    input_logloss_per_token: float
    correct_target_logloss_per_token: float
    target_token_counts: tuple[int, ...] = field(default=())


def _check_finite(value: float, what: str, lineno: int) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise IngestError(f"{what} must be a finite number, got {value!r}", line=lineno)
    return float(value)


def read_scores(path: Path | str) -> tuple[dict, list[ExampleScores]]:
    path = Path(path)
    header, records = _read_header(path, SCORES_SCHEMA)
    for key in ("model_id", "tokenizer_id"):
        if not isinstance(header.get(key), str):
            raise IngestError(f"{path}: header is missing '{key}'", line=1)
    out: list[ExampleScores] = []
    seen: set[str] = set()
    for lineno, obj in records:
        ex_id = obj.get("example_id")
        if not isinstance(ex_id, str) or ex_id == "":
            raise IngestError("missing 'example_id'", line=lineno)
        if ex_id in seen:
            raise IngestError(f"duplicate example_id '{ex_id}'", line=lineno)
        seen.add(ex_id)
        lps = obj.get("target_logprobs")
        if not isinstance(lps, list) or not lps:
            raise IngestError("'target_logprobs' must be a non-empty list", line=lineno)
        lps = tuple(_check_finite(v, "target logprob", lineno) for v in lps)
        in_loss = _check_finite(obj.get("input_logloss_per_token"), "input_logloss_per_token", lineno)
        tgt_loss = _check_finite(
            obj.get("correct_target_logloss_per_token"), "correct_target_logloss_per_token", lineno
        )
        if in_loss < 0 or tgt_loss < 0:
            raise IngestError("per-token losses must be non-negative", line=lineno)
        counts = obj.get("target_token_counts", [])
        if not isinstance(counts, list) or not all(isinstance(c, int) and c >= 1 for c in counts):
            raise IngestError("'target_token_counts' must be a list of positive integers", line=lineno)
        if counts and len(counts) != len(lps):
            raise IngestError("'target_token_counts' length differs from 'target_logprobs'", line=lineno)
        out.append(
            ExampleScores(
                example_id=ex_id,
                target_logprobs=lps,
                input_logloss_per_token=in_loss,
                correct_target_logloss_per_token=tgt_loss,
                target_token_counts=tuple(counts),
            )
        )
    if not out:
        raise IngestError(f"{path}: no score records")
    return header, out


def write_scores(
    path: Path | str,
    model_id: str,
    tokenizer_id: str,
    shots: int,
    records: Iterable[ExampleScores],
    extra_header: dict | None = None,
) -> int:
    header = {
        "schema": SCORES_SCHEMA,
        "version": SCHEMA_VERSION,
        "model_id": model_id,
        "tokenizer_id": tokenizer_id,
        "shots": shots,
    }
    header.update(extra_header or {})
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for rec in records:
            f.write(
                json.dumps(
                    {
                        "example_id": rec.example_id,
                        "target_logprobs": list(rec.target_logprobs),
                        "input_logloss_per_token": rec.input_logloss_per_token,
                        "correct_target_logloss_per_token": rec.correct_target_logloss_per_token,
                        "target_token_counts": list(rec.target_token_counts),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            n += 1
    return n
