"""Decentralization metrics over a contribution distribution.

All functions are pure and operate on the proportion vector of a
``ContributionDistribution``. Every metric here is invariant under
uniform rescaling of the raw counts, so computing on proportions or on
counts gives identical values. Entropies are reported in bits (log base
2) so Shannon and Renyi values are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InvalidAlphaError
from .model import ContributionDistribution

DEFAULT_NAKAMOTO_THRESHOLD = 0.51

#: Absolute slack for threshold comparisons. Decimal thresholds such as
#: 0.51 are not exactly representable in binary, so a prefix that equals
#: the threshold in real arithmetic can land one ulp short in floats;
#: the slack absorbs that without affecting non-degenerate cases.
THRESHOLD_SLACK = 1e-12

#: Above this entry count the Gini switches from the quadratic double
#: sum to the sorted rank formula (governance snapshots can hold 1e5+
#: wallets, where the double sum is prohibitive).
GINI_PAIRWISE_LIMIT = 10_000

METRIC_KINDS = (
    "shannon_entropy",
    "renyi_entropy",
    "gini",
    "nakamoto",
    "hhi",
    "node_count",
)


def shannon_entropy(d: ContributionDistribution) -> float:
    """Shannon entropy -sum(p * log2 p) in bits.

    Uses the continuity convention 0*log2(0) = 0. Zero counts are
    dropped at normalization, but a positive count can still underflow
    to proportion 0. A single-entity distribution scores exactly 0.
    """
    p = d.proportions
    p = p[p > 0.0]
    return float(-(p @ np.log2(p))) + 0.0


def renyi_entropy(d: ContributionDistribution, alpha: float) -> float:
    """Renyi entropy of order ``alpha`` in bits.

    Defined as log2(sum(p**alpha)) / (1 - alpha) for alpha != 1. Order 0
    is Hartley entropy log2(n); order 1 is the Shannon limit, dispatched
    directly. The power sum is evaluated with the largest proportion
    factored out, which keeps the result finite for arbitrarily large
    orders.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0:
        raise InvalidAlphaError(f"alpha {alpha!r} must be finite and >= 0")
    if alpha == 0:
        return math.log2(len(d))
    if alpha == 1:
        return shannon_entropy(d)
    p = d.proportions
    p_max = float(p[0])  # entries are sorted by descending proportion
    ratio_sum = float(np.power(p / p_max, alpha).sum())
    return (alpha * math.log2(p_max) + math.log2(ratio_sum)) / (1.0 - alpha)


def _gini_pairwise(values: np.ndarray) -> float:
    """Gini by the quadratic double sum sum_ij |x_i - x_j| / (2 n^2 mean)."""
    n = values.size
    if n == 1:
        return 0.0
    # Block the outer difference so peak memory stays near 80 MB at the
    # n = 10_000 crossover.
    rows_per_block = max(1, 10_000_000 // n)
    abs_diff = 0.0
    for i in range(0, n, rows_per_block):
        block = values[i : i + rows_per_block, None] - values[None, :]
        abs_diff += float(np.abs(block).sum())
    mean = float(values.sum()) / n
    return abs_diff / (2.0 * n * n * mean)


def _gini_sorted(values: np.ndarray) -> float:
    """Gini by the O(n log n) rank formula sum_i (2i - n - 1) x_(i) / (n sum x)."""
    n = values.size
    if n == 1:
        return 0.0
    x = np.sort(values)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return float(((2.0 * ranks - n - 1) @ x) / (n * x.sum()))


def gini(d: ContributionDistribution) -> float:
    """Gini inequality coefficient of the contribution proportions.

    Note that Gini measures inequality, not decentralization: it is 0
    for a single entity and identical for distributions with matching
    inequality but different entity counts.
    """
    p = d.proportions
    if p.size <= GINI_PAIRWISE_LIMIT:
        return _gini_pairwise(p)
    return _gini_sorted(p)


@dataclass(frozen=True)
class NakamotoPartition:
    """Split of a distribution into the Nakamoto set and the remainder.

    The Nakamoto set is the smallest group of top entities whose combined
    proportion reaches the control threshold; its size is the Nakamoto
    coefficient. Ties in proportion are resolved by ascending entity id,
    which fixes set membership without affecting the coefficient.
    """

    nakamoto_set: Tuple[str, ...]
    non_nakamoto_set: Tuple[str, ...]
    coefficient: int
    threshold: float

    def __post_init__(self) -> None:
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold {self.threshold!r} must lie in (0, 1)")
        if self.coefficient != len(self.nakamoto_set):
            raise ValueError("coefficient must equal the Nakamoto set size")


def nakamoto(
    d: ContributionDistribution, threshold: float = DEFAULT_NAKAMOTO_THRESHOLD
) -> NakamotoPartition:
    """Nakamoto coefficient and the corresponding partition.

    Scans prefix sums of the descending-sorted proportions and stops at
    the first prefix reaching the threshold. The worst case is k = n,
    so this never fails on a valid distribution.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold {threshold!r} must lie in (0, 1)")
    prefix = np.cumsum(d.proportions)
    k = int(np.searchsorted(prefix, threshold - THRESHOLD_SLACK, side="left")) + 1
    k = min(k, len(d))
    entities = d.entities
    return NakamotoPartition(
        nakamoto_set=entities[:k],
        non_nakamoto_set=entities[k:],
        coefficient=k,
        threshold=threshold,
    )


def nakamoto_coefficient(
    d: ContributionDistribution, threshold: float = DEFAULT_NAKAMOTO_THRESHOLD
) -> int:
    return nakamoto(d, threshold).coefficient


def hhi(d: ContributionDistribution) -> float:
    """Herfindahl-Hirschman index: the sum of squared proportions, in (0, 1]."""
    p = d.proportions
    return float(p @ p)


def node_count(d: ContributionDistribution) -> int:
    """Number of entities with a positive contribution in the window."""
    return len(d)


def compute_metric(
    d: ContributionDistribution,
    kind: str,
    alpha: float | None = None,
    threshold: float = DEFAULT_NAKAMOTO_THRESHOLD,
) -> float:
    """Evaluate one metric kind by name; used by the panel builder."""
    if kind == "shannon_entropy":
        return shannon_entropy(d)
    if kind == "renyi_entropy":
        if alpha is None:
            raise InvalidAlphaError("renyi_entropy requires alpha")
        return renyi_entropy(d, alpha)
    if kind == "gini":
        return gini(d)
    if kind == "nakamoto":
        return float(nakamoto(d, threshold).coefficient)
    if kind == "hhi":
        return hhi(d)
    if kind == "node_count":
        return float(node_count(d))
    raise ValueError(f"unknown metric kind {kind!r}")


def series_label(kind: str, alpha: float | None = None) -> str:
    """Column/file label for a metric, e.g. ``renyi_entropy_a2``."""
    if kind == "renyi_entropy":
        if alpha is None:
            raise InvalidAlphaError("renyi_entropy requires alpha")
        return f"renyi_entropy_a{alpha:g}"
    return kind
