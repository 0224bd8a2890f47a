"""Knockout simulation and correlation analysis.

The knockout study asks what a system looks like after its controlling
coalition is taken offline: remove the Nakamoto set, renormalize the
survivors into a full distribution, and re-measure. Pre/post Pearson
correlations then quantify how much information a metric carries about
the part of the distribution outside the Nakamoto set.

p-values are computed from the exact Student-t relation through a
continued-fraction evaluation of the regularized incomplete beta
function, so no statistics dependency is needed at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InsufficientDataError,
    LengthMismatchError,
    ZeroVarianceError,
)
from .metrics import (
    DEFAULT_NAKAMOTO_THRESHOLD,
    NakamotoPartition,
    hhi,
    nakamoto,
    node_count,
    shannon_entropy,
)
from .model import ContributionDistribution, TimeWindow, normalize

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15
_BETACF_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's continued fraction for the incomplete beta integral."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x!r} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only below the distribution
    # mean; above it, evaluate the mirrored integral.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    t = float(t)
    if not math.isfinite(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson correlation between two named series.

    ``degenerate`` marks zero-variance input, where r is undefined; it is
    reported as such rather than coerced to 0.
    """

    series_a: str
    series_b: str
    n: int
    r: Optional[float]
    p_value: Optional[float]
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.degenerate:
            return
        if self.r is None or not -1.0 <= self.r <= 1.0:
            raise ValueError(f"r {self.r!r} outside [-1, 1]")
        if self.p_value is None or not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value!r} outside [0, 1]")


def pearson(
    xs: Sequence[float],
    ys: Sequence[float],
    series_a: str = "x",
    series_b: str = "y",
) -> CorrelationReport:
    """Product-moment correlation with a two-sided t-test p-value.

    Requires at least three paired samples and nonzero variance on both
    sides. The p-value comes from t = r * sqrt((n-2) / (1-r^2)) against
    Student's t with n-2 degrees of freedom; |r| = 1 yields p = 0.
    """
    if len(xs) != len(ys):
        raise LengthMismatchError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise InsufficientDataError(f"need at least 3 paired samples, got {n}")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    ssx = float(dx @ dx)
    ssy = float(dy @ dy)
    if ssx == 0.0 or ssy == 0.0:
        raise ZeroVarianceError("correlation undefined for zero-variance input")
    r = float(dx @ dy) / math.sqrt(ssx * ssy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if 1.0 - r * r <= 0.0:
        p = 0.0
    else:
        t = r * math.sqrt(df / (1.0 - r * r))
        p = student_t_two_sided_p(t, df)
    return CorrelationReport(series_a=series_a, series_b=series_b, n=n, r=r, p_value=p)


@dataclass(frozen=True)
class MetricSnapshot:
    """The metric set compared before and after a knockout."""

    shannon_entropy: float
    nakamoto_coefficient: int
    hhi: float
    node_count: int


@dataclass(frozen=True)
class KnockoutResult:
    """Metrics before and after removing a window's Nakamoto set.

    ``post`` is None when the Nakamoto set was the whole distribution
    (a monopoly knocks out everything); that is a value state, not an
    error.
    """

    window: Optional[TimeWindow]
    pre: MetricSnapshot
    post: Optional[MetricSnapshot]
    removed: NakamotoPartition

    def __post_init__(self) -> None:
        if self.post is not None:
            expected = self.pre.node_count - self.removed.coefficient
            if self.post.node_count != expected:
                raise ValueError(
                    f"post node count {self.post.node_count} != "
                    f"{self.pre.node_count} - {self.removed.coefficient}"
                )


def _snapshot(d: ContributionDistribution, threshold: float) -> MetricSnapshot:
    return MetricSnapshot(
        shannon_entropy=shannon_entropy(d),
        nakamoto_coefficient=nakamoto(d, threshold).coefficient,
        hhi=hhi(d),
        node_count=node_count(d),
    )


def knockout(
    d: ContributionDistribution, threshold: float = DEFAULT_NAKAMOTO_THRESHOLD
) -> KnockoutResult:
    """Remove the Nakamoto set, renormalize the rest, and re-measure."""
    partition = nakamoto(d, threshold)
    pre = _snapshot(d, threshold)
    survivors = d.entries[partition.coefficient :]
    if survivors:
        remainder = normalize(
            [(e.entity, e.count) for e in survivors],
            window=d.window,
            subsystem=d.subsystem,
        )
        post = _snapshot(remainder, threshold)
    else:
        post = None
    return KnockoutResult(window=d.window, pre=pre, post=post, removed=partition)


def knockout_series(
    distributions: Sequence[ContributionDistribution],
    threshold: float = DEFAULT_NAKAMOTO_THRESHOLD,
) -> Tuple[CorrelationReport, CorrelationReport]:
    """Pre/post knockout correlations for entropy and the Nakamoto coefficient.

    Windows whose post metrics are undefined (monopolies) are dropped.
    Needs at least three defined windows; zero-variance series come back
    flagged degenerate instead of raising.
    """
    results = [knockout(d, threshold) for d in distributions]
    defined = [r for r in results if r.post is not None]
    if len(defined) < 3:
        raise InsufficientDataError(
            f"need >= 3 windows with defined post-knockout metrics, got {len(defined)}"
        )

    def correlate(name: str, pre_vals, post_vals) -> CorrelationReport:
        try:
            return pearson(pre_vals, post_vals, f"pre_{name}", f"post_{name}")
        except ZeroVarianceError:
            return CorrelationReport(
                series_a=f"pre_{name}",
                series_b=f"post_{name}",
                n=len(pre_vals),
                r=None,
                p_value=None,
                degenerate=True,
            )

    entropy_report = correlate(
        "shannon_entropy",
        [r.pre.shannon_entropy for r in defined],
        [r.post.shannon_entropy for r in defined],
    )
    nakamoto_report = correlate(
        "nakamoto",
        [float(r.pre.nakamoto_coefficient) for r in defined],
        [float(r.post.nakamoto_coefficient) for r in defined],
    )
    return entropy_report, nakamoto_report
