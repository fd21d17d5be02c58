"""Token n-gram distributions and KL-divergence between them.

Two representation schemes:

  unigram_explicit  counts over an explicit vocabulary (one coordinate per
                    known token), for tokenizers with a fixed index space.
  bigram_hashed     adjacent token pairs hashed into a fixed 10,000-dim
                    vector with 64-bit FNV-1a (offset 0xcbf29ce484222325,
                    prime 0x100000001b3) over ``utf8(t1) 0x1f utf8(t2)``,
                    reduced modulo the dimension. The constants are frozen:
                    hashed vectors are comparable across platforms and runs.

KL is computed on additively smoothed copies (add epsilon to every
coordinate, renormalize), which keeps the value finite when the second
argument has empty coordinates. Convention used by the pipeline: the task
distribution is the first argument and the reference corpus the second.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .corpus import Document
from .errors import DimensionMismatchError, TokenStreamError, ValidationFailure
from .util import FNV64_OFFSET, FNV64_PRIME, fnv1a64

log = logging.getLogger(__name__)

UNIGRAM_EXPLICIT = "unigram_explicit"
BIGRAM_HASHED = "bigram_hashed"
BIGRAM_DIM = 10_000
PAIR_SEPARATOR = b"\x1f"

_MAGIC = b"SBTD"
_VERSION = 1


class Tokenizer(Protocol):
    """Deterministic text-to-token mapping; same text, same token sequence."""

    id: str

    def encode(self, text: str) -> list[str]: ...


class WhitespaceTokenizer:
    """Fallback tokenizer: split on Unicode whitespace, keep tokens verbatim."""

    id = "whitespace-v1"

    def encode(self, text: str) -> list[str]:
        return text.split()


class VocabTokenizer:
    """Greedy longest-match encoding against an external vocabulary file.

    The file lists one token per line. Text is consumed left to right,
    always taking the longest vocabulary entry that matches; characters
    matching no entry become single-character tokens. Whitespace separates
    words and is never part of a token.
    """

    def __init__(self, vocab_path: Path | str):
        path = Path(vocab_path)
        tokens = [line.rstrip("\n") for line in path.read_text(encoding="utf-8").splitlines()]
        self.tokens = [t for t in tokens if t != ""]
        if not self.tokens:
            raise ValidationFailure(f"{path}: empty vocabulary file")
        self._by_first: dict[str, list[str]] = {}
        for t in self.tokens:
            self._by_first.setdefault(t[0], []).append(t)
        for group in self._by_first.values():
            group.sort(key=len, reverse=True)
        self.max_len = max(len(t) for t in self.tokens)
        self.id = f"vocab-fnv64-{fnv1a64(chr(0).join(sorted(self.tokens)).encode('utf-8')):016x}"

    def _encode_word(self, word: str) -> list[str]:
        out: list[str] = []
        i = 0
        while i < len(word):
            match = None
            for cand in self._by_first.get(word[i], ()):
                if word.startswith(cand, i):
                    match = cand
                    break
            if match is None:
                match = word[i]
            out.append(match)
            i += len(match)
        return out

    def encode(self, text: str) -> list[str]:
        out: list[str] = []
        for word in text.split():
            out.extend(self._encode_word(word))
        return out


class Vocabulary:
    """Explicit token index space for unigram distributions."""

    def __init__(self, tokens: Iterable[str]):
        self.index: dict[str, int] = {}
        for t in tokens:
            if t not in self.index:
                self.index[t] = len(self.index)
        if not self.index:
            raise ValidationFailure("empty vocabulary")

    def __len__(self) -> int:
        return len(self.index)

    @classmethod
    def from_documents(cls, doc_sets: Iterable[Iterable[Document]], tokenizer: Tokenizer) -> "Vocabulary":
        """Shared vocabulary over the union of datasets, in sorted token order."""
        seen: set[str] = set()
        for docs in doc_sets:
            for doc in docs:
                seen.update(tokenizer.encode(doc.text))
        return cls(sorted(seen))

    @classmethod
    def from_file(cls, path: Path | str) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(t for t in lines if t != "")


def hash_bigram(first: str, second: str, dim: int = BIGRAM_DIM) -> int:
    """Bucket index of a token pair under the frozen FNV-1a construction."""
    return fnv1a64(first.encode("utf-8") + PAIR_SEPARATOR + second.encode("utf-8")) % dim


@dataclass(frozen=True)
class TokenDistribution:
    dim: int
    probs: np.ndarray  # float64, sums to 1
    total_count: int
    scheme: str
    tokenizer_id: str

    def __post_init__(self):
        if self.probs.shape != (self.dim,):
            raise DimensionMismatchError(f"probs shape {self.probs.shape} != ({self.dim},)")
        if np.any(self.probs < 0):
            raise ValidationFailure("negative probability mass")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValidationFailure(f"probabilities sum to {self.probs.sum()!r}, not 1")
        if self.scheme == BIGRAM_HASHED and self.dim != BIGRAM_DIM:
            raise DimensionMismatchError(f"bigram_hashed requires dim={BIGRAM_DIM}")

    def save(self, path: Path | str) -> None:
        header = {
            "scheme": self.scheme,
            "dim": self.dim,
            "total_count": self.total_count,
            "tokenizer_id": self.tokenizer_id,
            "hash": (
                {"name": "fnv1a64", "offset": FNV64_OFFSET, "prime": FNV64_PRIME, "separator": 0x1F}
                if self.scheme == BIGRAM_HASHED
                else None
            ),
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<II", _VERSION, len(blob)))
            f.write(blob)
            f.write(np.ascontiguousarray(self.probs, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: Path | str) -> "TokenDistribution":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != _MAGIC:
                raise ValidationFailure(f"{path}: not a token distribution file")
            version, hlen = struct.unpack("<II", f.read(8))
            if version != _VERSION:
                raise ValidationFailure(f"{path}: unsupported version {version}")
            header = json.loads(f.read(hlen).decode("utf-8"))
            probs = np.frombuffer(f.read(), dtype="<f8").astype(np.float64)
        return cls(
            dim=header["dim"],
            probs=probs,
            total_count=header["total_count"],
            scheme=header["scheme"],
            tokenizer_id=header["tokenizer_id"],
        )


def count_tokens(
    docs: Iterable[Document],
    scheme: str,
    tokenizer: Tokenizer,
    vocab: Vocabulary | None = None,
) -> np.ndarray:
    """Raw integer counts for one document stream; exact, so partial counts
    from parallel workers can be merged by addition without changing results."""
    if scheme == UNIGRAM_EXPLICIT:
        if vocab is None:
            raise ValidationFailure("unigram_explicit requires a vocabulary")
        counts = np.zeros(len(vocab), dtype=np.int64)
        for doc in docs:
            for tok in tokenizer.encode(doc.text):
                idx = vocab.index.get(tok)
                if idx is None:
                    raise ValidationFailure(f"token {tok!r} not in vocabulary")
                counts[idx] += 1
        return counts
    if scheme == BIGRAM_HASHED:
        counts = np.zeros(BIGRAM_DIM, dtype=np.int64)
        for doc in docs:
            toks = tokenizer.encode(doc.text)
            for a, b in zip(toks, toks[1:]):
                counts[hash_bigram(a, b)] += 1
        return counts
    raise ValidationFailure(f"unknown scheme '{scheme}'")


def build_distribution(
    docs: Iterable[Document],
    scheme: str,
    tokenizer: Tokenizer,
    vocab: Vocabulary | None = None,
) -> TokenDistribution:
    counts = count_tokens(docs, scheme, tokenizer, vocab=vocab)
    total = int(counts.sum())
    if total == 0:
        what = "token pairs" if scheme == BIGRAM_HASHED else "tokens"
        raise TokenStreamError(f"document stream produced no {what}")
    return TokenDistribution(
        dim=len(counts),
        probs=counts.astype(np.float64) / total,
        total_count=total,
        scheme=scheme,
        tokenizer_id=tokenizer.id,
    )


def smooth(probs: np.ndarray, epsilon: float) -> np.ndarray:
    """Add epsilon to every coordinate and renormalize."""
    return (probs + epsilon) / (1.0 + epsilon * probs.shape[0])


def kl_divergence(p: TokenDistribution, q: TokenDistribution, epsilon: float = 1e-9) -> float:
    """KL(p || q) in nats over epsilon-smoothed, renormalized vectors.

    Smoothing is required for finiteness when q has empty coordinates; the
    returned value is >= 0 and equals 0 exactly when the smoothed vectors
    are equal.
    """
    if epsilon <= 0:
        raise ValidationFailure("epsilon must be > 0")
    if p.dim != q.dim or p.scheme != q.scheme:
        raise DimensionMismatchError(
            f"incompatible distributions: ({p.scheme}, dim {p.dim}) vs ({q.scheme}, dim {q.dim})"
        )
    ps = smooth(p.probs, epsilon)
    qs = smooth(q.probs, epsilon)
    return float(np.sum(ps * (np.log(ps) - np.log(qs))))
