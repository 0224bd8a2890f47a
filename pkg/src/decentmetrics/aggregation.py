"""Windowed aggregation of record streams and metric panel assembly.

Aggregation accumulates weights keyed by (window, entity), so memory is
bounded by the number of distinct keys rather than the record count, and
any permutation of the input stream produces bit-identical output (see
``exactsum``). Windows with no records are gaps, never zeros: entropy of
"no activity" is undefined and zero-filling would distort downstream
correlations.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Iterable, List, Optional, Sequence, Tuple

from .errors import DecentMetricsError
from .exactsum import add_partial, partials_total
from .metrics import (
    DEFAULT_NAKAMOTO_THRESHOLD,
    METRIC_KINDS,
    compute_metric,
    series_label,
)
from .model import (
    ContributionDistribution,
    ContributionRecord,
    Granularity,
    SubsystemKind,
    TimeWindow,
    normalize,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsystemDescriptor:
    """Binds an ecosystem and subsystem to an aggregation granularity.

    The granularity defaults per subsystem and may only be widened
    (daily to monthly); narrowing is rejected because source data may
    not resolve below its native window.
    """

    ecosystem: str
    subsystem: SubsystemKind
    granularity: Optional[Granularity] = None

    def __post_init__(self) -> None:
        default = self.subsystem.default_granularity
        if self.granularity is None:
            object.__setattr__(self, "granularity", default)
        elif default is Granularity.MONTHLY and self.granularity is Granularity.DAILY:
            raise ValueError(
                f"{self.subsystem.value} data is monthly; cannot narrow to daily windows"
            )


@dataclass(frozen=True)
class MetricSeries:
    """Per-window values of one metric for one (ecosystem, subsystem)."""

    descriptor: SubsystemDescriptor
    metric: str
    points: Tuple[Tuple[TimeWindow, float], ...]
    gaps: Tuple[TimeWindow, ...] = ()

    def __post_init__(self) -> None:
        starts = [w.start for w, _ in self.points]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("series points must be strictly increasing by window start")
        for window, value in self.points:
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError(f"non-finite value {value!r} at {window.start_date}")

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(v for _, v in self.points)


def _window_key(ts: datetime, granularity: Granularity):
    if granularity is Granularity.DAILY:
        return ts.date()
    return (ts.year, ts.month)


def _window_from_key(key, granularity: Granularity) -> TimeWindow:
    if granularity is Granularity.DAILY:
        start = datetime(key.year, key.month, key.day, tzinfo=timezone.utc)
    else:
        start = datetime(key[0], key[1], 1, tzinfo=timezone.utc)
    return TimeWindow.containing(start, granularity)


def window_aggregate(
    records: Iterable[ContributionRecord],
    descriptor: SubsystemDescriptor,
    counters: Optional[Counter] = None,
) -> List[ContributionDistribution]:
    """Fold a record stream into one distribution per non-empty window.

    Records may arrive in any order. Zero-weight records and records
    tagged with a different subsystem are counted (when ``counters`` is
    given) and skipped, never silently dropped.
    """
    if counters is None:
        counters = Counter()
    granularity = descriptor.granularity
    acc: dict = {}
    for record in records:
        counters["records_in"] += 1
        if record.subsystem is not descriptor.subsystem:
            counters["skipped_subsystem_mismatch"] += 1
            continue
        if record.weight == 0:
            counters["skipped_zero_weight"] += 1
            continue
        counters["records_used"] += 1
        key = _window_key(record.timestamp, granularity)
        per_entity = acc.setdefault(key, {})
        add_partial(per_entity.setdefault(record.entity, []), record.weight)

    distributions = []
    for key in sorted(acc):
        merged = {entity: partials_total(p) for entity, p in acc[key].items()}
        distributions.append(
            normalize(
                sorted(merged.items()),
                window=_window_from_key(key, granularity),
                subsystem=descriptor.subsystem,
            )
        )
    return distributions


def _next_window(window: TimeWindow) -> TimeWindow:
    if window.granularity is Granularity.DAILY:
        return TimeWindow.containing(window.start + timedelta(days=1), window.granularity)
    return TimeWindow.containing(window.end, window.granularity)


def calendar_gaps(
    present: Sequence[TimeWindow], granularity: Granularity
) -> List[TimeWindow]:
    """Windows missing between the first and last observed window."""
    if len(present) < 2:
        return []
    have = {w.start for w in present}
    gaps = []
    cursor = min(present, key=lambda w: w.start)
    last = max(w.start for w in present)
    while cursor.start < last:
        if cursor.start not in have:
            gaps.append(cursor)
        cursor = _next_window(cursor)
    return gaps


def expand_metrics(
    metrics: Iterable[str], alphas: Sequence[float] = ()
) -> List[Tuple[str, Optional[float]]]:
    """Expand requested metric kinds into concrete (kind, alpha) pairs.

    Kinds come out in canonical order regardless of request order;
    ``renyi_entropy`` expands to one pair per alpha.
    """
    requested = set(metrics)
    unknown = requested - set(METRIC_KINDS)
    if unknown:
        raise ValueError(f"unknown metric kinds: {sorted(unknown)}")
    expanded: List[Tuple[str, Optional[float]]] = []
    for kind in METRIC_KINDS:
        if kind not in requested:
            continue
        if kind == "renyi_entropy":
            if not alphas:
                raise ValueError("renyi_entropy requested without any alpha values")
            seen = set()
            for alpha in alphas:
                if alpha not in seen:
                    seen.add(alpha)
                    expanded.append((kind, float(alpha)))
        else:
            expanded.append((kind, None))
    return expanded


def build_panel(
    distributions: Sequence[ContributionDistribution],
    metrics: Iterable[str],
    descriptor: SubsystemDescriptor,
    alphas: Sequence[float] = (),
    threshold: float = DEFAULT_NAKAMOTO_THRESHOLD,
) -> List[MetricSeries]:
    """Compute one MetricSeries per requested metric over the distributions.

    A window where a metric fails to evaluate becomes a gap in that
    series with the reason logged; the other series are unaffected.
    """
    ordered = sorted(distributions, key=lambda d: d.window.start)
    series = []
    for kind, alpha in expand_metrics(metrics, alphas):
        label = series_label(kind, alpha)
        points = []
        failed = []
        for dist in ordered:
            try:
                value = compute_metric(dist, kind, alpha=alpha, threshold=threshold)
            except DecentMetricsError as exc:
                logger.warning(
                    "%s failed for window %s: %s", label, dist.window.start_date, exc
                )
                failed.append(dist.window)
                continue
            points.append((dist.window, value))
        present = [w for w, _ in points]
        gaps = tuple(
            sorted(
                calendar_gaps(present, descriptor.granularity) + failed,
                key=lambda w: w.start,
            )
        )
        series.append(
            MetricSeries(
                descriptor=descriptor,
                metric=label,
                points=tuple(points),
                gaps=gaps,
            )
        )
    return series
