import math

import numpy as np
import pytest

from simbench.errors import EmptyDatasetError, ValidationFailure
from simbench.mauve import (
    QuantizedPair,
    average_mauve,
    default_num_clusters,
    mauve,
    quantize,
)


def pair_from(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return QuantizedPair(k=p.shape[0], p_hist=p, q_hist=q, assignments=np.zeros(1, dtype=np.int64))


def oracle_frontier_area(p, q, c, num_points):
    """Independent frontier evaluation: own KL, own trapezoid, same grid."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    keep = (p > 0) | (q > 0)
    p, q = p[keep], q[keep]

    def kl(a, b):
        total = 0.0
        for ai, bi in zip(a, b):
            if ai > 0:
                total += ai * math.log(ai / bi)
        return total

    pts = [(0.0, 1.0), (1.0, 0.0)]
    for i in range(1, num_points + 1):
        lam = i / (num_points + 1)
        mix = lam * p + (1 - lam) * q
        pts.append((math.exp(-c * kl(q, mix)), math.exp(-c * kl(p, mix))))
    pts.sort(key=lambda t: (t[0], -t[1]))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


class TestQuantize:
    def test_identical_sets_equal_histograms(self):
        rng = np.random.default_rng(0)
        vecs = rng.standard_normal((60, 8))
        pair = quantize(vecs, vecs.copy(), k=5, seed=1)
        assert np.array_equal(pair.p_hist, pair.q_hist)

    def test_separated_blobs_concentrate(self):
        rng = np.random.default_rng(1)
        blob_a = rng.standard_normal((200, 4)) + np.array([40.0, 0, 0, 0])  # 20 sigma apart
        blob_b = rng.standard_normal((200, 4)) - np.array([40.0, 0, 0, 0])
        pair = quantize(blob_a, blob_b, k=2, seed=2)
        # independent assignment check: sign of first coordinate decides the blob
        n = 200
        task_clusters = pair.assignments[:n]
        ref_clusters = pair.assignments[n:]
        task_major = np.bincount(task_clusters, minlength=2).argmax()
        ref_major = np.bincount(ref_clusters, minlength=2).argmax()
        assert task_major != ref_major
        assert pair.p_hist[task_major] >= 0.99
        assert pair.q_hist[ref_major] >= 0.99

    def test_seeded_determinism(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((100, 6))
        b = rng.standard_normal((80, 6))
        p1 = quantize(a, b, k=7, seed=11)
        p2 = quantize(a, b, k=7, seed=11)
        assert np.array_equal(p1.assignments, p2.assignments)

    def test_k_exceeding_points(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValidationFailure):
            quantize(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), k=7, seed=0)

    def test_empty_input(self):
        with pytest.raises(EmptyDatasetError):
            quantize(np.empty((0, 4)), np.ones((3, 4)), k=2, seed=0)

    def test_degenerate_identical_points_warn(self, caplog):
        vecs = np.ones((20, 3))
        with caplog.at_level("WARNING"):
            pair = quantize(vecs, vecs.copy(), k=2, seed=0)
        assert "single effective cluster" in caplog.text
        assert np.array_equal(pair.p_hist, pair.q_hist)


class TestMauveScore:
    def test_identical_histograms_score_one(self):
        r = mauve(pair_from([0.25, 0.5, 0.25], [0.25, 0.5, 0.25]))
        assert r.score == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_two_point_low_score(self):
        r = mauve(pair_from([1.0, 0.0], [0.0, 1.0]), c=5.0, num_points=25)
        assert r.score <= 0.05
        # oracle agreement on the same grid, plus the continuous closed form
        # integral(lambda^5 d((1-lambda)^5)) = 1/252 as a sanity anchor
        assert r.score == pytest.approx(oracle_frontier_area([1, 0], [0, 1], 5.0, 25), abs=1e-12)
        assert r.score == pytest.approx(1 / 252, abs=2e-4)

    def test_matches_independent_reimplementation(self):
        p, q = [0.6, 0.4], [0.4, 0.6]
        r = mauve(pair_from(p, q), c=5.0, num_points=25)
        assert r.score == pytest.approx(oracle_frontier_area(p, q, 5.0, 25), abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = rng.random(6)
            q = rng.random(6)
            p, q = p / p.sum(), q / q.sum()
            a = mauve(pair_from(p, q)).score
            b = mauve(pair_from(q, p)).score
            assert abs(a - b) <= 1e-9

    def test_monotone_degradation(self):
        rng = np.random.default_rng(6)
        p = rng.random(8)
        q = rng.random(8)
        p, q = p / p.sum(), q / q.sum()
        scores = []
        for t in np.linspace(0.0, 1.0, 11):
            pt = (1 - t) * p + t * q
            scores.append(mauve(pair_from(pt, q)).score)
        assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))
        assert scores[-1] == pytest.approx(1.0, abs=1e-9)

    def test_grid_refinement_stability(self):
        for p, q in [([0.6, 0.4], [0.4, 0.6]), ([0.1, 0.3, 0.6], [0.5, 0.25, 0.25])]:
            base = mauve(pair_from(p, q), num_points=25).score
            fine = mauve(pair_from(p, q), num_points=50).score
            assert abs(fine - base) < 1e-3

    def test_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = rng.random(5)
            q = rng.random(5)
            r = mauve(pair_from(p / p.sum(), q / q.sum()))
            assert 0.0 < r.score <= 1.0

    def test_parameter_validation(self):
        pair = pair_from([0.5, 0.5], [0.5, 0.5])
        with pytest.raises(ValidationFailure):
            mauve(pair, c=0.0)
        with pytest.raises(ValidationFailure):
            mauve(pair, num_points=2)
        with pytest.raises(ValidationFailure):
            pair_from([0.7, 0.7], [0.5, 0.5])


class TestAverageMauve:
    def test_single_repeat_equals_single_call(self):
        rng = np.random.default_rng(8)
        task = rng.standard_normal((40, 5))
        ref = rng.standard_normal((60, 5))
        avg = average_mauve(task, ref, sample_size=1000, repeats=1, seed=3, k=4)
        # reference smaller than sample size: the full reference is used once
        assert len(avg.per_repeat) == 1
        assert avg.mean_score == avg.per_repeat[0]
        assert avg.sample_size == 60

    def test_reproducible_triple(self):
        rng = np.random.default_rng(9)
        task = rng.standard_normal((50, 4))
        ref = rng.standard_normal((900, 4))
        a = average_mauve(task, ref, sample_size=200, repeats=3, seed=5, k=8)
        b = average_mauve(task, ref, sample_size=200, repeats=3, seed=5, k=8)
        assert a == b
        assert len(a.per_repeat) == 3

    def test_same_distribution_beats_unrelated(self):
        rng = np.random.default_rng(10)
        ref = rng.standard_normal((2000, 6))
        task_same = ref[rng.choice(2000, size=150, replace=False)]
        task_other = rng.standard_normal((150, 6)) * 0.4 + 4.0
        same = average_mauve(task_same, ref, sample_size=500, repeats=2, seed=7, k=20)
        other = average_mauve(task_other, ref, sample_size=500, repeats=2, seed=7, k=20)
        assert same.mean_score > other.mean_score

    def test_repeats_validation(self):
        with pytest.raises(ValidationFailure):
            average_mauve(np.ones((5, 2)), np.ones((5, 2)), repeats=0)


def test_default_num_clusters():
    assert default_num_clusters(40) == 4
    assert default_num_clusters(10_000) == 500
    assert default_num_clusters(21) == 2
