"""Deterministic synthetic fixtures with declared ground-truth metrics.

Each fixture writes a data file valid under the ingest schemas plus a
``*_truth.json`` documenting the metric series the pipeline must
reproduce. Ground truth is computed from the in-memory contribution
intent (through the same attribution and normalization rules the
pipeline applies), never by re-reading the generated file, so a
round-trip through the file format is a real test of the encode,
ingest, and aggregation path.

Row order is shuffled with the mandatory seed; the pipeline's
order-independence makes that harmless, and the same seed always
produces the same bytes.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .aggregation import SubsystemDescriptor, build_panel
from .attribution import RewardPayout, RewardRecipient, attribute_proportional
from .errors import InvalidParamsError
from .io import SIMPLE_COLUMNS, TIME_COLUMNS, write_json
from .metrics import DEFAULT_NAKAMOTO_THRESHOLD
from .model import ContributionDistribution, Granularity, SubsystemKind, TimeWindow, normalize

FIXTURE_KINDS = ("uniform", "zipf", "duopoly", "stepwise")

#: Metric set documented in every ground-truth file.
TRUTH_METRICS = ("shannon_entropy", "renyi_entropy", "gini", "nakamoto", "hhi", "node_count")
TRUTH_ALPHAS = (2.0,)


@dataclass(frozen=True)
class Fixture:
    kind: str
    subsystem: SubsystemKind
    ecosystem: str
    seed: int
    params: dict
    csv_path: Path
    truth_path: Path
    ground_truth: dict


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParamsError(message)


def _advance(start: date, steps: int, granularity: Granularity) -> date:
    if granularity is Granularity.DAILY:
        return start + timedelta(days=steps)
    month = start.month - 1 + steps
    return date(start.year + month // 12, month % 12 + 1, 1)


def _entity_names(count: int, subsystem: SubsystemKind, rng: random.Random) -> List[str]:
    if subsystem is SubsystemKind.CONSENSUS:
        names = [f"0x{rng.getrandbits(160):040x}" for _ in range(count)]
    else:
        names = [f"entity-{i:04d}-{rng.getrandbits(16):04x}" for i in range(count)]
    if len(set(names)) != count:
        raise InvalidParamsError("entity name collision; use a different seed")
    return names


def _window_weights(
    kind: str, params: dict, names: Sequence[str], n_windows: int
) -> List[Dict[str, float]]:
    """Idealized entity -> weight map for every window."""
    if kind == "uniform":
        weight = float(params["per_entity"])
        return [{name: weight for name in names}] * n_windows
    if kind == "zipf":
        weights = [1.0 / (rank**params["exponent"]) for rank in range(1, len(names) + 1)]
        return [dict(zip(names, weights))] * n_windows
    if kind == "duopoly":
        return [dict(zip(names, params["shares"]))] * n_windows
    # stepwise: nested entity sets widening every days_per_level windows
    maps = []
    weight = float(params["per_entity"])
    for index in range(n_windows):
        level = params["levels"][index // params["days_per_level"]]
        maps.append({name: weight for name in names[:level]})
    return maps


def gen_fixture(
    kind: str,
    out_dir: str | Path,
    seed: int,
    subsystem: SubsystemKind = SubsystemKind.CONSENSUS,
    ecosystem: str = "synthetic",
    start: str = "2021-01-01",
    **params,
) -> Fixture:
    """Generate one synthetic fixture and its ground-truth file.

    Supported kinds and their parameters (all optional):

    * ``uniform``:  entities=4, days=2, per_entity=1
    * ``zipf``:     entities=10, days=2, exponent=1.0
    * ``duopoly``:  shares=(0.65, 0.35), days=2
    * ``stepwise``: levels=(2, 4, 8), days_per_level=2, per_entity=1

    ``days`` counts consecutive windows, so it means months for the
    monthly subsystems. Uniform and stepwise weights are unit block
    counts; zipf and duopoly weights flow through proportional reward
    splitting on consensus and plain weight rows elsewhere.
    """
    if kind not in FIXTURE_KINDS:
        raise InvalidParamsError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    seed = int(seed)
    defaults = {
        "uniform": {"entities": 4, "days": 2, "per_entity": 1},
        "zipf": {"entities": 10, "days": 2, "exponent": 1.0},
        "duopoly": {"shares": (0.65, 0.35), "days": 2},
        "stepwise": {"levels": (2, 4, 8), "days_per_level": 2, "per_entity": 1},
    }[kind]
    unknown = set(params) - set(defaults)
    _require(not unknown, f"unknown parameters for {kind}: {sorted(unknown)}")
    merged = {**defaults, **params}

    _require(int(merged.get("days", 1)) >= 1, "days must be >= 1")
    if "entities" in merged:
        _require(int(merged["entities"]) >= 1, "entities must be >= 1")
        merged["entities"] = int(merged["entities"])
    if "per_entity" in merged:
        _require(int(merged["per_entity"]) >= 1, "per_entity must be >= 1")
        merged["per_entity"] = int(merged["per_entity"])
    if kind == "zipf":
        exponent = float(merged["exponent"])
        _require(exponent >= 0, "exponent must be >= 0")
        merged["exponent"] = exponent
    if kind == "duopoly":
        shares = tuple(float(s) for s in merged["shares"])
        _require(len(shares) >= 2 and all(s > 0 for s in shares), "shares need >= 2 positive values")
        merged["shares"] = shares
    if kind == "stepwise":
        levels = tuple(int(v) for v in merged["levels"])
        _require(bool(levels) and all(v >= 1 for v in levels), "levels need >= 1 positive counts")
        _require(int(merged["days_per_level"]) >= 1, "days_per_level must be >= 1")
        merged["levels"] = levels
        merged["days_per_level"] = int(merged["days_per_level"])

    granularity = subsystem.default_granularity
    start_date = date.fromisoformat(start)
    if kind == "stepwise":
        n_windows = len(merged["levels"]) * merged["days_per_level"]
    else:
        n_windows = int(merged["days"])
        merged["days"] = n_windows
    last = _advance(start_date, n_windows - 1, granularity)
    _require(
        last <= datetime.now(timezone.utc).date(),
        f"fixture windows extend into the future (last window {last})",
    )

    rng = random.Random(seed)
    if kind == "duopoly":
        entity_count = len(merged["shares"])
    elif kind == "stepwise":
        entity_count = max(merged["levels"])
    else:
        entity_count = merged["entities"]
    names = _entity_names(entity_count, subsystem, rng)

    window_starts = [_advance(start_date, i, granularity) for i in range(n_windows)]
    weight_maps = _window_weights(kind, merged, names, n_windows)
    unit_weights = kind in ("uniform", "stepwise")

    rows, header = _render_rows(
        subsystem, granularity, window_starts, weight_maps, unit_weights, merged, rng
    )
    rng.shuffle(rows)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{ecosystem}_{subsystem.value}_{kind}_seed{seed}"
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    truth = _ground_truth(
        kind, subsystem, ecosystem, seed, merged, window_starts, weight_maps, unit_weights
    )
    truth_path = out_dir / f"{stem}_truth.json"
    write_json(truth, truth_path)
    return Fixture(
        kind=kind,
        subsystem=subsystem,
        ecosystem=ecosystem,
        seed=seed,
        params=merged,
        csv_path=csv_path,
        truth_path=truth_path,
        ground_truth=truth,
    )


def _row_time(window_start: date, granularity: Granularity, rng: random.Random) -> str:
    base = datetime(window_start.year, window_start.month, window_start.day, tzinfo=timezone.utc)
    if granularity is Granularity.MONTHLY:
        base += timedelta(days=rng.randrange(28))
    moment = base + timedelta(seconds=rng.randrange(86400))
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _time_cell(window_start: date, subsystem: SubsystemKind) -> str:
    if TIME_COLUMNS[subsystem] == "month":
        return window_start.strftime("%Y-%m")
    return window_start.isoformat()


def _render_rows(subsystem, granularity, window_starts, weight_maps, unit_weights, params, rng):
    rows: List[List[str]] = []
    if subsystem is SubsystemKind.CONSENSUS:
        if unit_weights:
            header = ["timestamp", "block_id", "producer"]
            block = 0
            for window_start, weights in zip(window_starts, weight_maps):
                for entity in weights:
                    for _ in range(params["per_entity"]):
                        rows.append([_row_time(window_start, granularity, rng), f"blk-{block:08d}", entity])
                        block += 1
        else:
            header = ["timestamp", "block_id", "recipient", "amount"]
            for window_start, weights in zip(window_starts, weight_maps):
                block_id = f"blk-{window_start.isoformat()}"
                stamp = _row_time(window_start, granularity, rng)
                for entity, weight in weights.items():
                    rows.append([stamp, block_id, entity, repr(weight)])
    else:
        entity_column, weight_column = SIMPLE_COLUMNS[subsystem]
        header = [TIME_COLUMNS[subsystem], entity_column, weight_column]
        for window_start, weights in zip(window_starts, weight_maps):
            for entity, weight in weights.items():
                rows.append([_time_cell(window_start, subsystem), entity, repr(weight)])
    return rows, header


def _intent_distribution(
    subsystem: SubsystemKind,
    window: TimeWindow,
    weights: Dict[str, float],
    unit_weights: bool,
) -> ContributionDistribution:
    """The distribution the written rows are meant to encode."""
    if subsystem is SubsystemKind.CONSENSUS and not unit_weights:
        payout = RewardPayout(
            block_id="intent",
            recipients=tuple(RewardRecipient(e, w) for e, w in weights.items()),
        )
        pairs: List[Tuple[str, float]] = attribute_proportional(payout)
    else:
        pairs = list(weights.items())
    return normalize(pairs, window=window, subsystem=subsystem)


def _ground_truth(
    kind, subsystem, ecosystem, seed, params, window_starts, weight_maps, unit_weights
) -> dict:
    granularity = subsystem.default_granularity
    descriptor = SubsystemDescriptor(ecosystem=ecosystem, subsystem=subsystem)
    dists = []
    for window_start, weights in zip(window_starts, weight_maps):
        anchor = datetime(
            window_start.year, window_start.month, window_start.day, tzinfo=timezone.utc
        )
        window = TimeWindow.containing(anchor, granularity)
        dists.append(_intent_distribution(subsystem, window, weights, unit_weights))
    panel = build_panel(
        dists,
        TRUTH_METRICS,
        descriptor,
        alphas=TRUTH_ALPHAS,
        threshold=DEFAULT_NAKAMOTO_THRESHOLD,
    )
    series = {
        s.metric: [[window.start_date, value] for window, value in s.points] for s in panel
    }
    json_params = {
        key: (list(value) if isinstance(value, tuple) else value) for key, value in params.items()
    }
    return {
        "kind": kind,
        "subsystem": subsystem.value,
        "ecosystem": ecosystem,
        "granularity": granularity.value,
        "seed": seed,
        "params": json_params,
        "alphas": list(TRUTH_ALPHAS),
        "nakamoto_threshold": DEFAULT_NAKAMOTO_THRESHOLD,
        "series": series,
    }
