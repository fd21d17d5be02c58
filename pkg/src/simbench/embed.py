"""Sharded exact nearest-neighbor scan over unit-normalized embeddings.

The reference corpus lives in binary shard files; queries are scanned
against every shard with streaming dot products (cosine similarity, since
all rows are unit norm) and exact per-query top-k statistics are merged
across shards. No approximation anywhere: a task example present verbatim
in the corpus scores a maximum cosine similarity of 1, which is what makes
the scan usable for leakage detection.

Shard file layout (little-endian):

    magic "SBES" | u32 version | u32 dim | u64 count
    count x dim float32 row-major matrix
    u64 id-table length | JSON array of ids (UTF-8)

The manifest is a JSON file listing shards in scan order with per-file
SHA-256 checksums.
"""

from __future__ import annotations

import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatchError, EmptyDatasetError, ValidationFailure, ZeroVectorError
from .util import sha256_file

log = logging.getLogger(__name__)

_MAGIC = b"SBES"
_VERSION = 1
MANIFEST_NAME = "index.json"
NORM_TOLERANCE = 1e-3
DEFAULT_TOP_K = 1000


@dataclass(frozen=True)
class NeighborResult:
    query_id: str
    max_sim: float
    mean_top_k: float
    k_used: int
    argmax_id: str
    neighbor_ids: tuple[str, ...] | None = None  # populated only on request


def write_shard(path: Path | str, vectors: np.ndarray, ids: Sequence[str]) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    count, dim = vectors.shape
    if count != len(ids):
        raise ValidationFailure(f"{count} vectors but {len(ids)} ids")
    id_blob = json.dumps(list(ids), ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIQ", _VERSION, dim, count))
        f.write(vectors.tobytes())
        f.write(struct.pack("<Q", len(id_blob)))
        f.write(id_blob)


def read_shard(path: Path | str) -> tuple[np.ndarray, list[str]]:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValidationFailure(f"{path}: not a shard file")
        version, dim, count = struct.unpack("<IIQ", f.read(16))
        if version != _VERSION:
            raise ValidationFailure(f"{path}: unsupported shard version {version}")
        matrix = np.frombuffer(f.read(4 * dim * count), dtype="<f4").reshape(count, dim)
        (id_len,) = struct.unpack("<Q", f.read(8))
        ids = json.loads(f.read(id_len).decode("utf-8"))
    if len(ids) != count:
        raise ValidationFailure(f"{path}: id table length {len(ids)} != count {count}")
    return matrix, ids


def build_shards(
    rows: Iterable[tuple[str, np.ndarray]],
    out_dir: Path | str,
    shard_size: int,
) -> Path:
    """Write unit-normalized shard files plus a manifest; returns manifest path.

    Rows whose norm deviates from 1 by more than the tolerance are
    renormalized with a warning; a zero row is an error naming its position.
    """
    if shard_size < 1:
        raise ValidationFailure("shard_size must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dim: int | None = None
    shard_infos: list[dict] = []
    buffer_vecs: list[np.ndarray] = []
    buffer_ids: list[str] = []
    renorm_warned = 0
    total = 0

    def flush() -> None:
        nonlocal buffer_vecs, buffer_ids
        if not buffer_vecs:
            return
        name = f"shard-{len(shard_infos):05d}.bin"
        path = out_dir / name
        write_shard(path, np.vstack(buffer_vecs), buffer_ids)
        shard_infos.append({"file": name, "count": len(buffer_ids), "sha256": sha256_file(path)})
        buffer_vecs, buffer_ids = [], []

    for row_index, (doc_id, vec) in enumerate(rows):
        vec = np.asarray(vec, dtype=np.float64)
        if dim is None:
            dim = int(vec.shape[0])
        elif vec.shape[0] != dim:
            raise DimensionMismatchError(
                f"row {row_index} ('{doc_id}') has dim {vec.shape[0]}, expected {dim}"
            )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ZeroVectorError(row_index)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            renorm_warned += 1
            if renorm_warned <= 5:
                log.warning("row %d ('%s'): norm %.6f deviates from 1, renormalizing", row_index, doc_id, norm)
        buffer_vecs.append((vec / norm).astype(np.float32))
        buffer_ids.append(doc_id)
        total += 1
        if len(buffer_ids) == shard_size:
            flush()
    flush()

    if total == 0:
        raise EmptyDatasetError("no embedding rows to shard")
    if renorm_warned > 5:
        log.warning("%d rows renormalized in total", renorm_warned)

    manifest = {
        "format": "simbench-shards",
        "version": _VERSION,
        "dim": dim,
        "total_count": total,
        "shards": shard_infos,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    return manifest_path


def load_manifest(manifest_path: Path | str) -> dict:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != "simbench-shards":
        raise ValidationFailure(f"{manifest_path}: not a shard manifest")
    manifest["_dir"] = str(manifest_path.parent)
    return manifest


def _iter_shards(manifest: dict, verify: bool = False) -> Iterator[tuple[np.ndarray, list[str]]]:
    base = Path(manifest["_dir"])
    for info in manifest["shards"]:
        path = base / info["file"]
        if verify and sha256_file(path) != info["sha256"]:
            raise ValidationFailure(f"{path}: checksum mismatch")
        yield read_shard(path)


def _shard_topk(
    matrix: np.ndarray, ids: list[str], queries: np.ndarray, k: int
) -> list[list[tuple[float, str]]]:
    """Per-query top-k candidates from one shard, each list sorted by
    (similarity desc, id asc). Dot products accumulate in float64."""
    sims = queries @ matrix.astype(np.float64).T  # (m, count)
    count = matrix.shape[0]
    kk = min(k, count)
    out: list[list[tuple[float, str]]] = []
    for row in sims:
        if kk < count:
            cand_idx = np.argpartition(-row, kk - 1)[:kk]
        else:
            cand_idx = np.arange(count)
        cands = [(float(row[i]), ids[i]) for i in cand_idx]
        cands.sort(key=lambda c: (-c[0], c[1]))
        out.append(cands)
    return out


def scan(
    queries: np.ndarray,
    query_ids: Sequence[str],
    manifest: dict,
    k: int = DEFAULT_TOP_K,
    workers: int = 1,
    keep_neighbors: bool = False,
) -> list[NeighborResult]:
    """Exact top-k cosine scan of every query against the whole index.

    Workers own disjoint shards; per-shard candidate lists are merged in
    manifest order with ties broken by ascending document id, so results do
    not depend on the worker count. When the corpus holds fewer than k
    documents the whole corpus is used and k_used records that.
    """
    if k < 1:
        raise ValidationFailure("k must be >= 1")
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValidationFailure("queries must be a 2-D matrix")
    if queries.shape[0] != len(query_ids):
        raise ValidationFailure(f"{queries.shape[0]} queries but {len(query_ids)} ids")
    if queries.shape[1] != manifest["dim"]:
        raise DimensionMismatchError(f"query dim {queries.shape[1]} != index dim {manifest['dim']}")
    if manifest["total_count"] == 0 or not manifest["shards"]:
        raise EmptyDatasetError("index contains no vectors")

    shards = list(_iter_shards(manifest))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_shard = list(pool.map(lambda s: _shard_topk(s[0], s[1], queries, k), shards))
    else:
        per_shard = [_shard_topk(matrix, ids, queries, k) for matrix, ids in shards]

    k_used = min(k, int(manifest["total_count"]))
    results: list[NeighborResult] = []
    for qi, query_id in enumerate(query_ids):
        merged: list[tuple[float, str]] = []
        for shard_cands in per_shard:
            merged.extend(shard_cands[qi])
        merged.sort(key=lambda c: (-c[0], c[1]))
        top = merged[:k_used]
        sims = np.array([s for s, _ in top], dtype=np.float64)
        results.append(
            NeighborResult(
                query_id=query_id,
                max_sim=float(sims[0]),
                mean_top_k=float(sims.mean()),
                k_used=k_used,
                argmax_id=top[0][1],
                neighbor_ids=tuple(doc_id for _, doc_id in top) if keep_neighbors else None,
            )
        )
    return results


def aggregate(results: Sequence[NeighborResult]) -> tuple[float, float]:
    """Dataset-level statistics: mean of per-example max and top-k mean."""
    if not results:
        raise EmptyDatasetError("no neighbor results to aggregate")
    mean_max = float(np.mean([r.max_sim for r in results]))
    mean_mean = float(np.mean([r.mean_top_k for r in results]))
    return mean_max, mean_mean
