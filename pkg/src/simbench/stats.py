"""Correlation of similarity measures with performance, under multiple-
comparison control.

Spearman and Pearson coefficients come with raw p-values whose provenance is
always recorded: analytic t-approximation, exact permutation enumeration
(automatic for n <= 7), or Monte Carlo permutation. Family-wise decisions use
Bonferroni (reject iff p < alpha/m) and the Benjamini-Yekutieli step-up
procedure, which stays valid under arbitrary dependence between tests.

Permutation counts compare squared correlation numerators in exact rational
arithmetic: the denominator is permutation-invariant, so ties are resolved
without floating-point ambiguity.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import t as student_t

from .errors import ValidationFailure
from .util import derive_seed, fmt_float

log = logging.getLogger(__name__)

SPEARMAN = "spearman"
PEARSON = "pearson"

# Whether a larger metric value means the datasets are closer (+) or
# farther (-); rendered next to each metric in tables.
METRIC_DIRECTIONS: dict[str, str] = {
    "unigram_kl": "-",
    "bigram_kl": "-",
    "mauve": "+",
    "max_cosine": "+",
    "mean_top1000_cosine": "+",
    "input_ppl": "-",
    "target_ppl": "-",
}

_P_FLOOR = 1e-300  # keeps analytic p-values inside (0, 1]
EXHAUSTIVE_MAX_N = 7


@dataclass(frozen=True)
class PairedSeries:
    labels: tuple[str, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.labels) == len(self.x) == len(self.y)):
            raise ValidationFailure("labels, x, and y must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationFailure("duplicate labels in series")
        if self.n < 3:
            raise ValidationFailure(f"need at least 3 pairs, got {self.n}")
        if any(not math.isfinite(v) for v in self.x) or any(not math.isfinite(v) for v in self.y):
            raise ValidationFailure("series contains NaN or infinite values")

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Correlation:
    method: str
    rho: float
    p_raw: float
    p_source: str  # "analytic" | "permutation"
    p_exact: bool  # permutation p from full enumeration rather than Monte Carlo
    n: int
    degenerate: bool = False


@dataclass(frozen=True)
class FamilyDecisions:
    m: int
    alpha: float
    bonferroni_threshold: float
    bonferroni_reject: tuple[bool, ...]
    by_reject: tuple[bool, ...]


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """Ranks starting at 1; tied values receive the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    n = values.shape[0]
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson_rho(x: np.ndarray, y: np.ndarray) -> float | None:
    """Product-moment correlation; None when either side is constant."""
    a = x - x.mean()
    b = y - y.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return None
    return float(a @ b) / denom


def _analytic_p(rho: float, n: int) -> float:
    """Two-sided p from the t-approximation with n-2 degrees of freedom."""
    if abs(rho) >= 1.0:
        return _P_FLOOR
    tstat = abs(rho) * math.sqrt((n - 2) / (1.0 - rho * rho))
    return max(float(2.0 * student_t.sf(tstat, df=n - 2)), _P_FLOOR)


def _degenerate(method: str, n: int) -> Correlation:
    log.warning("constant series: %s correlation undefined", method)
    return Correlation(
        method=method, rho=float("nan"), p_raw=float("nan"), p_source="analytic",
        p_exact=False, n=n, degenerate=True,
    )


def spearman(series: PairedSeries) -> Correlation:
    """Rank correlation with average ranks for ties; analytic p-value,
    recorded as approximate."""
    rx = average_ranks(series.x)
    ry = average_ranks(series.y)
    rho = _pearson_rho(rx, ry)
    if rho is None:
        return _degenerate(SPEARMAN, series.n)
    return Correlation(
        method=SPEARMAN, rho=rho, p_raw=_analytic_p(rho, series.n), p_source="analytic",
        p_exact=False, n=series.n,
    )


def pearson(series: PairedSeries) -> Correlation:
    rho = _pearson_rho(np.asarray(series.x), np.asarray(series.y))
    if rho is None:
        return _degenerate(PEARSON, series.n)
    return Correlation(
        method=PEARSON, rho=rho, p_raw=_analytic_p(rho, series.n), p_source="analytic",
        p_exact=False, n=series.n,
    )


def _paired_vectors(series: PairedSeries, method: str) -> tuple[np.ndarray, np.ndarray]:
    if method == SPEARMAN:
        return average_ranks(series.x), average_ranks(series.y)
    if method == PEARSON:
        return np.asarray(series.x, dtype=np.float64), np.asarray(series.y, dtype=np.float64)
    raise ValidationFailure(f"unknown correlation method '{method}'")


def _exhaustive_permutation_p(x: np.ndarray, y: np.ndarray) -> float:
    """p over all n! permutations of y, in exact rational arithmetic.

    |rho| comparisons reduce to comparing squared numerators because the
    denominator sqrt(Sxx * Syy) is invariant under permutation of y.
    """
    n = x.shape[0]
    xf = [Fraction(v) for v in x.tolist()]
    yf = [Fraction(v) for v in y.tolist()]
    mx = sum(xf, Fraction(0)) / n
    my = sum(yf, Fraction(0)) / n
    a = [v - mx for v in xf]
    b = [v - my for v in yf]
    obs = sum((ai * bi for ai, bi in zip(a, b)), Fraction(0))
    obs_sq = obs * obs
    count = 0
    for perm in itertools.permutations(b):
        num = sum((ai * bi for ai, bi in zip(a, perm)), Fraction(0))
        if num * num >= obs_sq:
            count += 1
    return count / math.factorial(n)


def permutation_pvalue(
    series: PairedSeries,
    method: str = SPEARMAN,
    iterations: int = 10_000,
    seed: int = 0,
    exhaustive: bool | None = None,
) -> Correlation:
    """Two-sided permutation p-value for the chosen correlation.

    For n <= 7 the full permutation group is enumerated and the p-value is
    exact; otherwise Monte Carlo with p = (1 + #{|rho_perm| >= |rho_obs|})
    / (iterations + 1). ``exhaustive`` overrides the size-based policy.
    """
    x, y = _paired_vectors(series, method)
    rho = _pearson_rho(x, y)
    if rho is None:
        return _degenerate(method, series.n)

    if exhaustive is None:
        exhaustive = series.n <= EXHAUSTIVE_MAX_N
    elif exhaustive and series.n > 9:
        raise ValidationFailure(f"refusing to enumerate {series.n}! permutations")
    if exhaustive:
        p = _exhaustive_permutation_p(x, y)
        return Correlation(
            method=method, rho=rho, p_raw=p, p_source="permutation", p_exact=True, n=series.n
        )

    if iterations < 100:
        raise ValidationFailure("need at least 100 permutation iterations")
    rng = np.random.default_rng(derive_seed(seed, "permutation", method))
    a = x - x.mean()
    b = y - y.mean()
    obs_sq = float(a @ b) ** 2
    hits = 0
    for _ in range(iterations):
        num = float(a @ rng.permutation(b))
        if num * num >= obs_sq:
            hits += 1
    p = (1 + hits) / (iterations + 1)
    return Correlation(
        method=method, rho=rho, p_raw=p, p_source="permutation", p_exact=False, n=series.n
    )


def harmonic_number(m: int) -> float:
    return float(math.fsum(1.0 / i for i in range(1, m + 1)))


def correct_family(p_values: Sequence[float], alpha: float) -> FamilyDecisions:
    """Family-wise decisions for one family of m tests.

    Bonferroni: reject iff p < alpha / m. Benjamini-Yekutieli: step-up with
    thresholds j * alpha / (m * H_m); the largest j whose sorted p passes
    determines the cutoff, and every p at or below it is rejected.
    """
    m = len(p_values)
    if m == 0:
        raise ValidationFailure("empty p-value family")
    if not 0.0 < alpha < 1.0:
        raise ValidationFailure(f"alpha {alpha} outside (0, 1)")
    for p in p_values:
        if not 0.0 < p <= 1.0:
            raise ValidationFailure(f"p-value {p} outside (0, 1]")

    bonf_threshold = alpha / m
    bonferroni = tuple(p < bonf_threshold for p in p_values)

    h_m = harmonic_number(m)
    order = sorted(range(m), key=lambda i: p_values[i])
    cutoff: float | None = None
    for j in range(m, 0, -1):
        if p_values[order[j - 1]] <= j * alpha / (m * h_m):
            cutoff = p_values[order[j - 1]]
            break
    by = tuple(p <= cutoff for p in p_values) if cutoff is not None else tuple([False] * m)
    return FamilyDecisions(
        m=m, alpha=alpha, bonferroni_threshold=bonf_threshold, bonferroni_reject=bonferroni, by_reject=by
    )


@dataclass(frozen=True)
class TableCell:
    metric: str
    model: str
    shots: int
    method: str
    direction: str
    rho: float
    p_raw: float
    p_source: str
    p_exact: bool
    n: int
    degenerate: bool
    bonferroni_reject: bool | None = None
    by_reject: bool | None = None
    m: int | None = None
    alpha: float | None = None


@dataclass(frozen=True)
class CorrelationTable:
    cells: tuple[TableCell, ...]
    alpha: float
    method: str
    family_size: int


def _cell_correlation(
    series: PairedSeries, method: str, p_mode: str, iterations: int, seed: int
) -> Correlation:
    if p_mode == "analytic":
        return spearman(series) if method == SPEARMAN else pearson(series)
    if p_mode == "permutation":
        return permutation_pvalue(series, method=method, iterations=iterations, seed=seed)
    if p_mode == "auto":
        # exact enumeration when feasible, Monte Carlo for mid-size n,
        # analytic once the t-approximation is comfortable
        if series.n <= EXHAUSTIVE_MAX_N or series.n < 50:
            return permutation_pvalue(series, method=method, iterations=iterations, seed=seed)
        return spearman(series) if method == SPEARMAN else pearson(series)
    raise ValidationFailure(f"unknown p_mode '{p_mode}'")


def build_table(
    cells: Mapping[tuple[str, str, int], PairedSeries | None],
    alpha: float,
    method: str = SPEARMAN,
    p_mode: str = "analytic",
    permutation_iterations: int = 10_000,
    seed: int = 0,
    directions: Mapping[str, str] | None = None,
) -> CorrelationTable:
    """Correlate every (metric, model, shots) cell and correct across the
    whole table as one family. Missing or degenerate cells are logged and
    excluded from the family size m."""
    directions = dict(METRIC_DIRECTIONS if directions is None else directions)
    computed: list[TableCell] = []
    for (metric, model, shots), series in sorted(cells.items()):
        if series is None:
            log.warning("cell (%s, %s, %d-shot) has no data: excluded from the family", metric, model, shots)
            continue
        corr = _cell_correlation(series, method, p_mode, permutation_iterations, seed)
        computed.append(
            TableCell(
                metric=metric, model=model, shots=shots, method=method,
                direction=directions.get(metric, "?"),
                rho=corr.rho, p_raw=corr.p_raw, p_source=corr.p_source, p_exact=corr.p_exact,
                n=corr.n, degenerate=corr.degenerate,
            )
        )

    testable = [c for c in computed if not c.degenerate]
    if testable:
        decisions = correct_family([c.p_raw for c in testable], alpha)
        by_index = {id(c): i for i, c in enumerate(testable)}
        computed = [
            replace(
                c,
                bonferroni_reject=decisions.bonferroni_reject[by_index[id(c)]] if not c.degenerate else None,
                by_reject=decisions.by_reject[by_index[id(c)]] if not c.degenerate else None,
                m=decisions.m if not c.degenerate else None,
                alpha=alpha,
            )
            for c in computed
        ]
    return CorrelationTable(
        cells=tuple(computed), alpha=alpha, method=method, family_size=len(testable)
    )


def cross_correlation_table(
    metric_values: Mapping[str, Mapping[str, float]],
    alpha: float,
    method: str = SPEARMAN,
    p_mode: str = "analytic",
    permutation_iterations: int = 10_000,
    seed: int = 0,
) -> CorrelationTable:
    """Metric-vs-metric correlations over shared labels; each unordered pair
    appears once and the triangle forms its own correction family."""
    metrics = sorted(metric_values)
    cells: dict[tuple[str, str, int], PairedSeries | None] = {}
    for i, ma in enumerate(metrics):
        for mb in metrics[i + 1 :]:
            shared = sorted(set(metric_values[ma]) & set(metric_values[mb]))
            dropped = (set(metric_values[ma]) | set(metric_values[mb])) - set(shared)
            if dropped:
                log.warning("pair (%s, %s): excluding unshared labels %s", ma, mb, sorted(dropped))
            if len(shared) < 3:
                cells[(ma, mb, 0)] = None
                continue
            cells[(ma, mb, 0)] = PairedSeries(
                labels=tuple(shared),
                x=tuple(metric_values[ma][l] for l in shared),
                y=tuple(metric_values[mb][l] for l in shared),
            )
    # reuse build_table's machinery: "model" slot holds the second metric
    table = build_table(
        cells, alpha, method=method, p_mode=p_mode,
        permutation_iterations=permutation_iterations, seed=seed,
        directions={m: METRIC_DIRECTIONS.get(m, "?") for m in metrics},
    )
    return table


CSV_COLUMNS = [
    "metric", "model", "shots", "method", "direction", "rho", "p_raw", "p_source",
    "bonferroni_reject", "by_reject", "m", "alpha", "n",
]


def render_table_csv(table: CorrelationTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in table.cells:
        writer.writerow(
            [
                c.metric, c.model, c.shots, c.method, c.direction,
                "" if math.isnan(c.rho) else fmt_float(c.rho),
                "" if math.isnan(c.p_raw) else fmt_float(c.p_raw),
                c.p_source + ("_exact" if c.p_exact else ""),
                "" if c.bonferroni_reject is None else str(c.bonferroni_reject).lower(),
                "" if c.by_reject is None else str(c.by_reject).lower(),
                "" if c.m is None else c.m,
                "" if c.alpha is None else fmt_float(c.alpha),
                c.n,
            ]
        )
    return buf.getvalue()


def render_table_text(table: CorrelationTable) -> str:
    """Grid rendering: one row per metric, one column per (model, shots),
    each cell showing rho with its raw p underneath-style annotation."""
    columns = sorted({(c.model, c.shots) for c in table.cells})
    metrics = sorted({c.metric for c in table.cells})
    by_key = {(c.metric, c.model, c.shots): c for c in table.cells}
    width = 22
    lines = []
    header = f"{'metric':<28}" + "".join(f"{f'{m} ({s}-shot)':>{width}}" for m, s in columns)
    lines.append(header)
    lines.append("-" * len(header))
    for metric in metrics:
        direction = next(c.direction for c in table.cells if c.metric == metric)
        row = f"{metric + ' (' + direction + ')':<28}"
        for model, shots in columns:
            cell = by_key.get((metric, model, shots))
            if cell is None or math.isnan(cell.rho):
                row += f"{'-':>{width}}"
            else:
                star = "*" if cell.bonferroni_reject else ""
                row += f"{f'{cell.rho:+.2f}{star} (p={cell.p_raw:.3g})':>{width}}"
        lines.append(row)
    lines.append("")
    lines.append(
        f"family size m={table.family_size}, alpha={table.alpha}, "
        f"bonferroni threshold={table.alpha / max(table.family_size, 1):.6g}; "
        f"* = significant after Bonferroni correction"
    )
    return "\n".join(lines) + "\n"
