"""Order-independent float accumulation.

Aggregation promises bit-identical output for any permutation of the
input records. Naive running sums break that promise because float
addition is not associative, so accumulators keep a list of exact
non-overlapping partials (Shewchuk's algorithm, the same scheme behind
``math.fsum``). Each ``add`` preserves the exact real-valued sum, and the
final ``math.fsum`` over the partials rounds that exact sum once, making
the result independent of insertion order.
"""

from __future__ import annotations

import math


def add_partial(partials: list[float], value: float) -> None:
    """Fold ``value`` into a list of non-overlapping partial sums in place."""
    x = value
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]


def partials_total(partials: list[float]) -> float:
    """Correctly rounded sum of the accumulated partials."""
    return math.fsum(partials)
