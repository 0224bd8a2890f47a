from __future__ import annotations

import numpy as np
import pytest

from decentmetrics.model import (
    ContributionDistribution,
    Granularity,
    SubsystemKind,
    TimeWindow,
    normalize,
)


def make_dist(counts, window=None, subsystem=None) -> ContributionDistribution:
    """Distribution over synthetic entities E000, E001, ... with given counts."""
    pairs = [(f"E{i:03d}", float(c)) for i, c in enumerate(counts)]
    return normalize(pairs, window=window, subsystem=subsystem)


def random_dist(rng: np.random.Generator, n: int) -> ContributionDistribution:
    """Random distribution with n entities and positive uniform counts."""
    counts = rng.uniform(0.05, 10.0, size=n)
    return make_dist(counts)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240117)


@pytest.fixture
def day_window() -> TimeWindow:
    from datetime import datetime, timezone

    return TimeWindow.containing(
        datetime(2021, 3, 14, 15, 9, 2, tzinfo=timezone.utc), Granularity.DAILY
    )
