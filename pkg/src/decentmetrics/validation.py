"""Input coercion and validation helpers for the estimator API."""

from __future__ import annotations

import math
from dataclasses import replace
from datetime import datetime
from typing import Iterable, List, Mapping, Sequence, Union

import pandas as pd

from .errors import InvalidParamsError
from .model import ContributionRecord, SubsystemKind

RecordsLike = Union[pd.DataFrame, Iterable]

_FRAME_COLUMNS = ("timestamp", "entity", "weight")


def check_subsystem(value: Union[str, SubsystemKind]) -> SubsystemKind:
    if isinstance(value, SubsystemKind):
        return value
    try:
        return SubsystemKind(str(value))
    except ValueError:
        valid = ", ".join(k.value for k in SubsystemKind)
        raise InvalidParamsError(f"unknown subsystem {value!r}; expected one of: {valid}") from None


def check_threshold(value: float) -> float:
    value = float(value)
    if not 0 < value < 1:
        raise InvalidParamsError(f"threshold {value!r} must lie in (0, 1)")
    return value


def check_alphas(values: Sequence[float]) -> tuple:
    alphas = tuple(float(a) for a in values)
    for alpha in alphas:
        if not math.isfinite(alpha) or alpha < 0:
            raise InvalidParamsError(f"alpha {alpha!r} must be finite and >= 0")
    return alphas


def _timestamp(value) -> datetime:
    if isinstance(value, datetime):
        return value
    if isinstance(value, pd.Timestamp):
        return value.to_pydatetime()
    if isinstance(value, str):
        from .io import parse_timestamp

        return parse_timestamp(value)
    raise TypeError(f"cannot interpret {value!r} as a timestamp")


def check_records(X: RecordsLike, subsystem: SubsystemKind) -> List[ContributionRecord]:
    """Coerce records-like input into a list of ContributionRecords.

    Accepts a DataFrame with ``timestamp``/``entity``/``weight`` columns,
    an iterable of ContributionRecords, of mappings with those keys, or
    of (timestamp, entity, weight) triples. Everything is (re)tagged with
    the given subsystem so the aggregation step sees one coherent stream.
    """
    if isinstance(X, pd.DataFrame):
        missing = [c for c in _FRAME_COLUMNS if c not in X.columns]
        if missing:
            raise InvalidParamsError(f"records frame is missing columns {missing}")
        return [
            ContributionRecord(_timestamp(ts), str(entity), subsystem, float(weight))
            for ts, entity, weight in zip(X["timestamp"], X["entity"], X["weight"])
        ]

    records = []
    for item in X:
        if isinstance(item, ContributionRecord):
            if item.subsystem is not subsystem:
                item = replace(item, subsystem=subsystem)
            records.append(item)
        elif isinstance(item, Mapping):
            records.append(
                ContributionRecord(
                    _timestamp(item["timestamp"]),
                    str(item["entity"]),
                    subsystem,
                    float(item["weight"]),
                )
            )
        else:
            ts, entity, weight = item
            records.append(
                ContributionRecord(_timestamp(ts), str(entity), subsystem, float(weight))
            )
    return records
