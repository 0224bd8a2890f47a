"""Shared data model: entities, contribution records, windows, distributions.

Entities are opaque strings (addresses, developer handles, exchange or
protocol names) compared byte-for-byte; some chains use case-sensitive
checksummed addresses, so there is no case folding anywhere. The reserved
id ``Unknown`` marks contributions that cannot be attributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import EmptyDistributionError, NegativeCountError
from .exactsum import add_partial, partials_total

UNKNOWN_ENTITY = "Unknown"

#: Earliest timestamp any contribution record may carry.
MIN_TIMESTAMP = datetime(2008, 1, 1, tzinfo=timezone.utc)


class Granularity(str, Enum):
    DAILY = "daily"
    MONTHLY = "monthly"


class SubsystemKind(str, Enum):
    """The measured subsystems and their conventional window sizes."""

    CONSENSUS = "consensus"
    DEVELOPMENT = "development"
    EXCHANGES = "exchanges"
    DEFI_TVL = "defi_tvl"
    DEFI_GOVERNANCE = "defi_governance"
    NFT_MARKETPLACES = "nft_marketplaces"

    @property
    def default_granularity(self) -> Granularity:
        if self in (SubsystemKind.DEVELOPMENT, SubsystemKind.EXCHANGES):
            return Granularity.MONTHLY
        return Granularity.DAILY


def validate_entity_id(value: str) -> str:
    """Trim surrounding whitespace and reject empty ids."""
    entity = str(value).strip()
    if not entity:
        raise ValueError("entity id must be non-empty")
    return entity


def _as_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def check_timestamp(ts: datetime) -> datetime:
    """Normalize to UTC at seconds precision and bounds-check the instant."""
    ts = _as_utc(ts).replace(microsecond=0)
    if ts < MIN_TIMESTAMP:
        raise ValueError(f"timestamp {ts.isoformat()} predates {MIN_TIMESTAMP.date()}")
    if ts > datetime.now(timezone.utc):
        raise ValueError(f"timestamp {ts.isoformat()} lies in the future")
    return ts


@dataclass(frozen=True)
class TimeWindow:
    """Half-open UTC interval [start, end) at daily or monthly granularity."""

    start: datetime
    end: datetime
    granularity: Granularity

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", _as_utc(self.start))
        object.__setattr__(self, "end", _as_utc(self.end))
        if self.start >= self.end:
            raise ValueError(f"window start {self.start} must precede end {self.end}")
        for edge in (self.start, self.end):
            if (edge.hour, edge.minute, edge.second, edge.microsecond) != (0, 0, 0, 0):
                raise ValueError(f"window edge {edge} must align to UTC midnight")
            if self.granularity is Granularity.MONTHLY and edge.day != 1:
                raise ValueError(f"monthly window edge {edge} must be the first of a month")

    @classmethod
    def containing(cls, ts: datetime, granularity: Granularity) -> "TimeWindow":
        """The single daily or monthly window that contains ``ts``."""
        ts = _as_utc(ts)
        if granularity is Granularity.DAILY:
            start = ts.replace(hour=0, minute=0, second=0, microsecond=0)
            return cls(start, start + timedelta(days=1), granularity)
        start = ts.replace(day=1, hour=0, minute=0, second=0, microsecond=0)
        if start.month == 12:
            end = start.replace(year=start.year + 1, month=1)
        else:
            end = start.replace(month=start.month + 1)
        return cls(start, end, granularity)

    @property
    def start_date(self) -> str:
        return self.start.date().isoformat()


@dataclass(frozen=True)
class ContributionRecord:
    """One contribution event: who did how much, where, and when.

    Weight semantics depend on the subsystem (blocks, reward share,
    commits, USD volume, TVL, token balance). Zero weights are legal on
    input and ignored by aggregation.
    """

    timestamp: datetime
    entity: str
    subsystem: SubsystemKind
    weight: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "entity", validate_entity_id(self.entity))
        object.__setattr__(self, "timestamp", check_timestamp(self.timestamp))
        weight = float(self.weight)
        if not math.isfinite(weight) or weight < 0:
            raise NegativeCountError(f"weight {self.weight!r} must be finite and >= 0")
        object.__setattr__(self, "weight", weight)


class DistributionEntry(NamedTuple):
    entity: str
    count: float
    proportion: float


@dataclass(frozen=True)
class ContributionDistribution:
    """A window's contribution counts normalized into proportions.

    Entries are sorted by descending proportion with ties broken by
    ascending entity id, so equal inputs serialize identically no matter
    how they arrived.
    """

    entries: Tuple[DistributionEntry, ...]
    total: float
    window: Optional[TimeWindow] = None
    subsystem: Optional[SubsystemKind] = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise EmptyDistributionError("distribution has no entries")
        if not math.isfinite(self.total) or self.total <= 0:
            raise ValueError(f"total {self.total!r} must be finite and positive")
        seen = set()
        for entity, count, proportion in self.entries:
            if count <= 0:
                raise ValueError(f"entry {entity!r} has non-positive count {count!r}")
            # A positive count can still underflow to proportion 0.0 when
            # the total dwarfs it; that is legal, metrics use the
            # 0*log(0) = 0 convention.
            if not 0 <= proportion <= 1:
                raise ValueError(f"entry {entity!r} has proportion {proportion!r} outside [0, 1]")
            if entity in seen:
                raise ValueError(f"duplicate entity {entity!r}")
            seen.add(entity)
        keys = [(-e.count, e.entity) for e in self.entries]
        if keys != sorted(keys):
            raise ValueError("entries must be sorted by descending count, then entity id")
        if abs(math.fsum(e.proportion for e in self.entries) - 1.0) > 1e-9:
            raise ValueError("proportions must sum to 1 within 1e-9")

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def proportions(self) -> np.ndarray:
        return np.array([e.proportion for e in self.entries], dtype=np.float64)

    @cached_property
    def counts(self) -> np.ndarray:
        return np.array([e.count for e in self.entries], dtype=np.float64)

    @property
    def entities(self) -> Tuple[str, ...]:
        return tuple(e.entity for e in self.entries)


def normalize(
    raw: Iterable[Tuple[str, float]],
    window: Optional[TimeWindow] = None,
    subsystem: Optional[SubsystemKind] = None,
) -> ContributionDistribution:
    """Merge raw (entity, count) pairs into a normalized distribution.

    Duplicate entities are summed, zero counts dropped, and the result is
    deterministic for any input permutation: per-entity sums and the grand
    total use exact accumulation, and entries are ordered by descending
    count with entity-id tie-breaks.

    Raises EmptyDistributionError when nothing positive remains and
    NegativeCountError on negative or non-finite counts.
    """
    merged: dict[str, list[float]] = {}
    for entity, count in raw:
        entity = validate_entity_id(entity)
        count = float(count)
        if not math.isfinite(count) or count < 0:
            raise NegativeCountError(f"count {count!r} for entity {entity!r} must be finite and >= 0")
        add_partial(merged.setdefault(entity, []), count)

    counts = {entity: partials_total(p) for entity, p in merged.items()}
    counts = {entity: c for entity, c in counts.items() if c > 0}
    if not counts:
        raise EmptyDistributionError("all counts are zero or the input is empty")

    total = math.fsum(counts.values())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = tuple(
        DistributionEntry(entity, count, count / total) for entity, count in ordered
    )
    return ContributionDistribution(entries=entries, total=total, window=window, subsystem=subsystem)
