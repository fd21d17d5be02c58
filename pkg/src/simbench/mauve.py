"""Divergence-frontier similarity between two embedded datasets.

Both embedding sets are jointly quantized with k-means into a shared
cluster space; each dataset then becomes a histogram of cluster
occupancies. For mixture weights lambda on a grid inside (0, 1) the two
soft KL divergences against the mixture are mapped through exp(-c * KL)
to a frontier point, and the score is the area under the frontier polyline
(trapezoidal rule). Identical histograms score 1; near-disjoint histograms
score close to 0.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from .errors import EmptyDatasetError, ValidationFailure
from .util import derive_seed

log = logging.getLogger(__name__)

DEFAULT_SCALING = 5.0
DEFAULT_NUM_POINTS = 25
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6


def default_num_clusters(total_points: int) -> int:
    return max(2, min(500, total_points // 10))


@dataclass(frozen=True)
class QuantizedPair:
    k: int
    p_hist: np.ndarray
    q_hist: np.ndarray
    assignments: np.ndarray  # cluster index per input vector, task rows first

    def __post_init__(self):
        for name, hist in (("p_hist", self.p_hist), ("q_hist", self.q_hist)):
            if abs(float(hist.sum()) - 1.0) > 1e-9 or np.any(hist < 0):
                raise ValidationFailure(f"{name} is not a probability vector")


@dataclass(frozen=True)
class MauveResult:
    score: float
    num_frontier_points: int
    c: float
    seed: int


@dataclass(frozen=True)
class AverageMauveResult:
    mean_score: float
    per_repeat: tuple[float, ...]
    sample_size: int
    seed: int


def quantize(task_vecs: np.ndarray, ref_vecs: np.ndarray, k: int, seed: int) -> QuantizedPair:
    """Joint k-means over both sets; histograms are per-set cluster frequencies.

    Seeded k-means++ initialization with a single restart, so identical
    inputs and seed give identical assignments.
    """
    task_vecs = np.asarray(task_vecs, dtype=np.float64)
    ref_vecs = np.asarray(ref_vecs, dtype=np.float64)
    if task_vecs.size == 0 or ref_vecs.size == 0:
        raise EmptyDatasetError("both embedding sets must be non-empty")
    union = np.vstack([task_vecs, ref_vecs])
    if k < 2:
        raise ValidationFailure("k must be >= 2")
    if k > union.shape[0]:
        raise ValidationFailure(f"k={k} exceeds the {union.shape[0]} available points")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        km = KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=1,
            max_iter=KMEANS_MAX_ITER,
            tol=KMEANS_TOL,
            random_state=seed % (2**32),
            algorithm="lloyd",
        ).fit(union)
    assignments = km.labels_.astype(np.int64)
    if np.unique(assignments).shape[0] == 1:
        log.warning("quantization collapsed to a single effective cluster (degenerate inputs)")

    n_task = task_vecs.shape[0]
    p_hist = np.bincount(assignments[:n_task], minlength=k).astype(np.float64) / n_task
    q_hist = np.bincount(assignments[n_task:], minlength=k).astype(np.float64) / ref_vecs.shape[0]
    return QuantizedPair(k=k, p_hist=p_hist, q_hist=q_hist, assignments=assignments)


def _kl(a: np.ndarray, b: np.ndarray) -> float:
    """KL(a || b) over the support of a; b must be positive there."""
    mask = a > 0
    return float(np.sum(a[mask] * (np.log(a[mask]) - np.log(b[mask]))))


def frontier_points(p: np.ndarray, q: np.ndarray, c: float, num_points: int) -> np.ndarray:
    """Frontier samples (exp(-c*KL(q||mix)), exp(-c*KL(p||mix))) plus the two
    exact corner points (0,1) and (1,0) that anchor the curve."""
    keep = (p > 0) | (q > 0)  # coordinates empty in both sets carry no signal
    p = p[keep]
    q = q[keep]
    lambdas = np.linspace(0.0, 1.0, num_points + 2)[1:-1]
    pts = [(0.0, 1.0)]
    for lam in lambdas:
        mix = lam * p + (1.0 - lam) * q  # positive wherever p or q is
        pts.append((np.exp(-c * _kl(q, mix)), np.exp(-c * _kl(p, mix))))
    pts.append((1.0, 0.0))
    return np.asarray(pts, dtype=np.float64)


def _area_under(points: np.ndarray) -> float:
    order = sorted(range(points.shape[0]), key=lambda i: (points[i, 0], -points[i, 1]))
    xs = points[order, 0]
    ys = points[order, 1]
    return float(np.sum(np.diff(xs) * (ys[:-1] + ys[1:]) / 2.0))


def mauve(
    pair: QuantizedPair,
    c: float = DEFAULT_SCALING,
    num_points: int = DEFAULT_NUM_POINTS,
    seed: int = 0,
) -> MauveResult:
    if c <= 0:
        raise ValidationFailure("c must be > 0")
    if num_points < 3:
        raise ValidationFailure("num_points must be >= 3")
    pts = frontier_points(pair.p_hist, pair.q_hist, c, num_points)
    score = _area_under(pts)
    return MauveResult(score=score, num_frontier_points=num_points, c=c, seed=seed)


def average_mauve(
    task_vecs: np.ndarray,
    ref_vecs: np.ndarray,
    sample_size: int = 10_000,
    repeats: int = 1,
    seed: int = 0,
    k: int | None = None,
    c: float = DEFAULT_SCALING,
    num_points: int = DEFAULT_NUM_POINTS,
) -> AverageMauveResult:
    """Mean score over independent reference samples; per-repeat scores are
    retained for error bars. A reference smaller than the sample size is
    used whole, once, with a warning."""
    if repeats < 1:
        raise ValidationFailure("repeats must be >= 1")
    task_vecs = np.asarray(task_vecs, dtype=np.float64)
    ref_vecs = np.asarray(ref_vecs, dtype=np.float64)
    n_ref = ref_vecs.shape[0]
    if n_ref <= sample_size:
        if n_ref < sample_size:
            log.warning(
                "reference holds %d vectors < sample size %d: using the full reference once", n_ref, sample_size
            )
        samples = [ref_vecs]
    else:
        samples = []
        for r in range(repeats):
            rng = np.random.default_rng(derive_seed(seed, "mauve-sample", r))
            samples.append(ref_vecs[rng.choice(n_ref, size=sample_size, replace=False)])

    scores = []
    for r, ref_sample in enumerate(samples):
        kk = k if k is not None else default_num_clusters(task_vecs.shape[0] + ref_sample.shape[0])
        pair = quantize(task_vecs, ref_sample, k=kk, seed=derive_seed(seed, "mauve-kmeans", r))
        scores.append(mauve(pair, c=c, num_points=num_points, seed=seed).score)
    return AverageMauveResult(
        mean_score=float(np.mean(scores)),
        per_repeat=tuple(scores),
        sample_size=min(sample_size, n_ref),
        seed=seed,
    )
