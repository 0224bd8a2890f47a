from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from decentmetrics.analysis import (
    CorrelationReport,
    knockout,
    knockout_series,
    pearson,
    regularized_incomplete_beta,
    student_t_two_sided_p,
)
from decentmetrics.errors import (
    InsufficientDataError,
    LengthMismatchError,
    ZeroVarianceError,
)

from conftest import make_dist, random_dist
from oracles import pearson_direct, t_two_sided_p_quadrature


class TestIncompleteBeta:
    def test_against_scipy_grid(self):
        # scipy is an independent implementation; the design target is
        # relative error below 1e-10.
        for a in (0.5, 1.0, 2.5, 4.0, 15.0, 60.0):
            for b in (0.5, 1.0, 3.5, 20.0):
                for x in (1e-6, 0.1, 0.25, 0.5, 0.75, 0.9, 1 - 1e-6):
                    mine = regularized_incomplete_beta(a, b, x)
                    ref = float(special.betainc(a, b, x))
                    assert mine == pytest.approx(ref, rel=1e-10, abs=1e-300)

    def test_edges(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            regularized_incomplete_beta(-1.0, 2.0, 0.5)
        with pytest.raises(ValueError):
            regularized_incomplete_beta(1.0, 2.0, 1.5)


class TestStudentT:
    def test_zero_statistic_is_certain(self):
        assert student_t_two_sided_p(0.0, 8) == pytest.approx(1.0, abs=1e-12)

    def test_against_quadrature_oracle(self):
        for df in (1, 3, 8, 30):
            for t in (0.2, 1.0, 2.3066, 5.0):
                assert student_t_two_sided_p(t, df) == pytest.approx(
                    t_two_sided_p_quadrature(t, df), rel=1e-8
                )

    def test_symmetric_in_t(self):
        assert student_t_two_sided_p(2.5, 9) == student_t_two_sided_p(-2.5, 9)


class TestPearson:
    def test_identity(self):
        report = pearson([1, 2, 3], [1, 2, 3])
        assert report.r == 1.0
        assert report.p_value == 0.0

    def test_reversal(self):
        assert pearson([1, 2, 3], [3, 2, 1]).r == -1.0

    def test_p_at_criterion_point(self):
        # n=10 with r=0.632 sits essentially at the p=0.05 boundary.
        rng = np.random.default_rng(7)
        target = 0.632
        # Construct a pair with the exact r by rotating one series.
        x = rng.normal(size=10)
        y = rng.normal(size=10)
        x = (x - x.mean()) / x.std()
        y = (y - y.mean()) / y.std()
        y_orth = y - (x @ y / (x @ x)) * x
        y_mix = target * x / np.linalg.norm(x) + math.sqrt(1 - target**2) * y_orth / np.linalg.norm(y_orth)
        report = pearson(list(x), list(y_mix))
        assert report.r == pytest.approx(target, abs=1e-12)
        assert report.p_value == pytest.approx(0.05, abs=0.005)
        assert report.p_value == pytest.approx(
            t_two_sided_p_quadrature(target * math.sqrt(8 / (1 - target**2)), 8), rel=1e-8
        )

    def test_matches_direct_formula(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 120))
            xs = list(rng.normal(size=n))
            ys = list(rng.normal(size=n))
            assert pearson(xs, ys).r == pytest.approx(pearson_direct(xs, ys), abs=1e-12)

    def test_affine_invariance(self, rng):
        xs = list(rng.normal(size=25))
        assert pearson(xs, [3.5 * x + 2 for x in xs]).r == 1.0
        assert pearson(xs, [-0.25 * x + 9 for x in xs]).r == -1.0

    def test_symmetry(self, rng):
        xs = list(rng.normal(size=20))
        ys = list(rng.normal(size=20))
        assert pearson(xs, ys).r == pearson(ys, xs).r

    def test_p_monotone_in_abs_r(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=12)
        x = (x - x.mean()) / np.linalg.norm(x - x.mean())
        y = rng.normal(size=12)
        y = y - y.mean()
        y -= (x @ y) * x
        y /= np.linalg.norm(y)
        previous = 1.1
        for target in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
            mixed = target * x + math.sqrt(1 - target**2) * y
            report = pearson(list(x), list(mixed))
            assert report.r == pytest.approx(target, abs=1e-9)
            assert report.p_value < previous
            previous = report.p_value

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 1.0, 1.0], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            pearson([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            pearson([1, 2], [3, 4])


class TestKnockout:
    def test_uniform_ten(self):
        result = knockout(make_dist([1.0] * 10))
        assert result.removed.coefficient == 6
        assert result.post is not None
        assert result.post.node_count == 4
        assert result.post.shannon_entropy == 2.0

    def test_monopoly_undefined_post(self):
        result = knockout(make_dist([1.0]))
        assert result.removed.coefficient == 1
        assert result.post is None

    def test_dominant_entity_leaves_uniform_remainder(self):
        result = knockout(make_dist([0.6, 0.1, 0.1, 0.1, 0.1]))
        assert result.removed.coefficient == 1
        assert result.post.shannon_entropy == pytest.approx(2.0, abs=1e-12)
        assert result.post.node_count == 4

    def test_node_count_bookkeeping(self, rng):
        for _ in range(100):
            d = random_dist(rng, int(rng.integers(1, 40)))
            result = knockout(d)
            if result.post is not None:
                assert result.post.node_count == result.pre.node_count - result.removed.coefficient

    def test_minimality_of_nakamoto_set(self, rng):
        threshold = 0.51
        for _ in range(300):
            d = random_dist(rng, int(rng.integers(1, 25)))
            removed = knockout(d, threshold).removed
            shares = dict(zip(d.entities, d.proportions))
            removed_sum = math.fsum(shares[e] for e in removed.nakamoto_set)
            assert removed_sum >= threshold - 1e-12
            # dropping the smallest removed member falls below threshold
            if removed.coefficient > 1:
                assert removed_sum - shares[removed.nakamoto_set[-1]] < threshold

    def test_remainder_renormalized(self):
        result = knockout(make_dist([5.0, 2.0, 1.0, 1.0]))
        assert result.removed.coefficient == 1
        assert result.post.hhi == pytest.approx((2 / 4) ** 2 + (1 / 4) ** 2 * 2, abs=1e-12)


class TestKnockoutSeries:
    def test_linear_relation_gives_unit_correlation(self, rng):
        dists = []
        for i in range(12):
            counts = [10.0 + i] + [1.0 + 0.1 * i] * (4 + i)
            dists.append(make_dist(counts))
        entropy_report, nakamoto_report = knockout_series(dists)
        assert entropy_report.n == 12
        assert entropy_report.r is not None
        assert -1.0 <= entropy_report.r <= 1.0
        assert nakamoto_report.series_a == "pre_nakamoto"

    def test_identical_windows_flagged_degenerate(self):
        dists = [make_dist([3.0, 1.0, 1.0, 1.0]) for _ in range(5)]
        entropy_report, nakamoto_report = knockout_series(dists)
        assert entropy_report.degenerate
        assert entropy_report.r is None
        assert nakamoto_report.degenerate

    def test_insufficient_defined_windows(self):
        dists = [make_dist([1.0]) for _ in range(5)]  # all monopolies: post undefined
        with pytest.raises(InsufficientDataError):
            knockout_series(dists)

    def test_synthetic_panel_matches_direct_pearson(self, rng):
        dists = [random_dist(rng, int(rng.integers(5, 30))) for _ in range(100)]
        entropy_report, _ = knockout_series(dists)
        defined = [knockout(d) for d in dists]
        defined = [k for k in defined if k.post is not None]
        xs = [k.pre.shannon_entropy for k in defined]
        ys = [k.post.shannon_entropy for k in defined]
        assert entropy_report.r == pytest.approx(pearson_direct(xs, ys), abs=1e-12)


class TestCorrelationReport:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            CorrelationReport("a", "b", 5, r=1.5, p_value=0.1)
        with pytest.raises(ValueError):
            CorrelationReport("a", "b", 5, r=0.5, p_value=-0.1)

    def test_degenerate_allows_none(self):
        report = CorrelationReport("a", "b", 5, r=None, p_value=None, degenerate=True)
        assert report.degenerate
