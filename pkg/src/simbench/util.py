"""Small shared utilities: hashing, seed derivation, deterministic serialization.

All randomness in the package flows through explicit integer seeds. Sub-seeds
for pipeline stages are derived from the master seed plus a purpose string so
adding a stage never perturbs the draws of existing stages.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

# FNV-1a, 64-bit. Fixed, platform-independent constants; also used for the
# hashed-bigram feature space, so they must never change.
FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def derive_seed(master: int, *tags: str | int) -> int:
    """Derive a 63-bit sub-seed from a master seed and a purpose path.

    Deterministic and collision-resistant enough for stream separation:
    each tag is hashed into the running FNV state.
    """
    h = fnv1a64(str(int(master)).encode("utf-8"))
    for tag in tags:
        h ^= fnv1a64(str(tag).encode("utf-8"))
        h = (h * FNV64_PRIME) & _MASK64
    return h >> 1  # keep it a non-negative int64


def canonical_json(obj: Any) -> str:
    """JSON with sorted keys and no whitespace drift; basis for config hashes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; keeps CSV output byte-stable."""
    return repr(float(x))


def write_json(path: Path | str, obj: Any) -> None:
    """Deterministic JSON artifact: sorted keys, LF, trailing newline."""
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
