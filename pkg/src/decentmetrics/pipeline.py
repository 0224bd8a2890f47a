"""Run configuration and the compute pipeline.

A run ingests one or more input files, aggregates per subsystem, computes
the requested metric panel, and writes one CSV per (subsystem, metric)
plus a ``report.json`` with full row accounting. Outputs are bit-identical
across repeated runs on the same inputs: row order never matters, file
lists are sorted, numeric formatting is pinned, and the report carries no
wall-clock state.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .aggregation import (
    MetricSeries,
    SubsystemDescriptor,
    build_panel,
    calendar_gaps,
    expand_metrics,
    window_aggregate,
)
from .attribution import load_builder_labels
from .errors import EmptyDistributionError, EmptyFileError, InvalidParamsError
from .io import IngestStats, ingest, write_json, write_series_csv
from .metrics import DEFAULT_NAKAMOTO_THRESHOLD, METRIC_KINDS
from .model import Granularity, SubsystemKind

DEFAULT_METRICS = ("shannon_entropy", "gini", "nakamoto", "hhi", "node_count")


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one pipeline run."""

    inputs: Tuple[Tuple[Path, SubsystemKind], ...]
    output_dir: Path
    ecosystem: str = "unnamed"
    metrics: Tuple[str, ...] = DEFAULT_METRICS
    alphas: Tuple[float, ...] = ()
    nakamoto_threshold: float = DEFAULT_NAKAMOTO_THRESHOLD
    granularity: Optional[Granularity] = None
    labels_file: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.inputs:
            raise InvalidParamsError("at least one input is required")
        if not 0 < self.nakamoto_threshold < 1:
            raise InvalidParamsError(
                f"nakamoto threshold {self.nakamoto_threshold!r} must lie in (0, 1)"
            )
        for alpha in self.alphas:
            if not math.isfinite(alpha) or alpha < 0:
                raise InvalidParamsError(f"alpha {alpha!r} must be finite and >= 0")
        # Surfaces unknown metric names and a missing alpha list early.
        try:
            expand_metrics(self.metrics, self.alphas or (2.0,))
        except ValueError as exc:
            raise InvalidParamsError(str(exc)) from None
        if "renyi_entropy" in self.metrics and not self.alphas:
            raise InvalidParamsError("renyi_entropy requested without --alphas")


@dataclass
class RunResult:
    report: dict
    panels: Dict[SubsystemKind, List[MetricSeries]]
    output_files: List[Path] = field(default_factory=list)


def parse_subsystem(name: str) -> SubsystemKind:
    try:
        return SubsystemKind(name.strip())
    except ValueError:
        valid = ", ".join(kind.value for kind in SubsystemKind)
        raise InvalidParamsError(f"unknown subsystem {name!r}; expected one of: {valid}") from None


def parse_input_spec(spec: str) -> Tuple[Path, SubsystemKind]:
    """Parse one ``subsystem:path`` input argument."""
    kind, sep, path = spec.partition(":")
    if not sep or not path.strip():
        raise InvalidParamsError(f"input {spec!r} must look like subsystem:path")
    return Path(path.strip()), parse_subsystem(kind)


def expand_input_files(inputs: Sequence[Tuple[Path, SubsystemKind]]) -> List[Tuple[Path, SubsystemKind]]:
    """Resolve directories to their sorted delimited files."""
    expanded = []
    for path, kind in inputs:
        if path.is_dir():
            files = sorted(
                p for p in path.iterdir() if p.is_file() and p.suffix in (".csv", ".tsv", ".txt")
            )
            if not files:
                raise EmptyFileError(f"input directory {path} contains no data files")
            expanded.extend((f, kind) for f in files)
        else:
            expanded.append((path, kind))
    return expanded


def load_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` config file.

    Lines are ``key = value`` with ``#`` comments; the ``input`` key may
    repeat and accumulates, every other repeated key keeps its last
    value. Values may be quoted; lists are comma-separated.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidParamsError(f"{path}:{lineno}: expected key = value")
            key = key.strip().lower().replace("-", "_")
            value = value.strip().strip("'\"")
            if key == "input":
                values.setdefault("input", []).append(value)
            else:
                values[key] = value
    return values


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def config_from_sources(file_values: dict, flag_values: dict) -> RunConfig:
    """Merge config-file values with CLI flags; flags win."""
    merged = dict(file_values)
    for key, value in flag_values.items():
        if value is None:
            continue
        if key == "input":
            merged["input"] = list(value)
        else:
            merged[key] = value

    raw_inputs = merged.get("input") or []
    if isinstance(raw_inputs, str):
        raw_inputs = [raw_inputs]
    inputs = tuple(
        parse_input_spec(item) if isinstance(item, str) else item for item in raw_inputs
    )

    metrics = merged.get("metrics", DEFAULT_METRICS)
    if isinstance(metrics, str):
        metrics = tuple(_split_list(metrics))
    alphas = merged.get("alphas", ())
    if isinstance(alphas, str):
        try:
            alphas = tuple(float(a) for a in _split_list(alphas))
        except ValueError as exc:
            raise InvalidParamsError(f"bad alpha list: {exc}") from None
    threshold = merged.get("nakamoto_threshold", DEFAULT_NAKAMOTO_THRESHOLD)
    if isinstance(threshold, str):
        try:
            threshold = float(threshold)
        except ValueError:
            raise InvalidParamsError(f"bad nakamoto_threshold {threshold!r}") from None
    granularity = merged.get("granularity")
    if isinstance(granularity, str):
        try:
            granularity = Granularity(granularity.strip())
        except ValueError:
            raise InvalidParamsError("granularity must be daily or monthly") from None
    output = merged.get("output")
    if not output:
        raise InvalidParamsError("an output directory is required")
    labels = merged.get("labels")
    return RunConfig(
        inputs=inputs,
        output_dir=Path(output),
        ecosystem=str(merged.get("ecosystem", "unnamed")),
        metrics=tuple(metrics),
        alphas=tuple(alphas),
        nakamoto_threshold=float(threshold),
        granularity=granularity,
        labels_file=Path(labels) if labels else None,
    )


def aggregate_inputs(
    config: RunConfig,
) -> Tuple[Dict[SubsystemKind, list], Dict[SubsystemKind, Counter], List[IngestStats]]:
    """Ingest and window-aggregate every input, grouped by subsystem."""
    labels = (
        load_builder_labels(config.labels_file) if config.labels_file else frozenset()
    )
    files = expand_input_files(config.inputs)
    by_subsystem: Dict[SubsystemKind, List[Path]] = {}
    for path, kind in files:
        by_subsystem.setdefault(kind, []).append(path)

    distributions: Dict[SubsystemKind, list] = {}
    counters: Dict[SubsystemKind, Counter] = {}
    stats: List[IngestStats] = []
    for kind in sorted(by_subsystem, key=lambda k: k.value):
        descriptor = SubsystemDescriptor(
            ecosystem=config.ecosystem, subsystem=kind, granularity=config.granularity
        )
        file_stats = [IngestStats(path=str(p)) for p in by_subsystem[kind]]
        streams = [
            ingest(path, kind, builder_labels=labels, stats=s)
            for path, s in zip(by_subsystem[kind], file_stats)
        ]
        counter: Counter = Counter()
        dists = window_aggregate(itertools.chain.from_iterable(streams), descriptor, counter)
        if not dists:
            raise EmptyDistributionError(
                f"no usable records for subsystem {kind.value}; see skip counts"
            )
        distributions[kind] = dists
        counters[kind] = counter
        stats.extend(file_stats)
    return distributions, counters, stats


def run_pipeline(config: RunConfig) -> RunResult:
    """Execute a full compute run and write panel CSVs plus report.json."""
    distributions, counters, stats = aggregate_inputs(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)

    panels: Dict[SubsystemKind, List[MetricSeries]] = {}
    output_files: List[Path] = []
    subsystem_report: dict = {}
    for kind, dists in distributions.items():
        descriptor = SubsystemDescriptor(
            ecosystem=config.ecosystem, subsystem=kind, granularity=config.granularity
        )
        panel = build_panel(
            dists,
            config.metrics,
            descriptor,
            alphas=config.alphas,
            threshold=config.nakamoto_threshold,
        )
        panels[kind] = panel
        series_files = {}
        for series in panel:
            name = f"{config.ecosystem}_{kind.value}_{series.metric}.csv"
            write_series_csv(series, config.output_dir / name)
            output_files.append(config.output_dir / name)
            series_files[series.metric] = name
        gaps = calendar_gaps([d.window for d in dists], descriptor.granularity)
        counter = counters[kind]
        subsystem_report[kind.value] = {
            "granularity": descriptor.granularity.value,
            "records_in": counter["records_in"],
            "records_used": counter["records_used"],
            "skipped_zero_weight": counter["skipped_zero_weight"],
            "skipped_subsystem_mismatch": counter["skipped_subsystem_mismatch"],
            "windows": len(dists),
            "gap_windows": [w.start_date for w in gaps],
            "series": series_files,
        }

    report = {
        "ecosystem": config.ecosystem,
        "config": {
            "metrics": list(config.metrics),
            "alphas": list(config.alphas),
            "nakamoto_threshold": config.nakamoto_threshold,
            "granularity": config.granularity.value if config.granularity else None,
            "labels_file": str(config.labels_file) if config.labels_file else None,
        },
        "inputs": [s.as_dict() for s in stats],
        "subsystems": subsystem_report,
    }
    report_path = config.output_dir / "report.json"
    write_json(report, report_path)
    output_files.append(report_path)
    return RunResult(report=report, panels=panels, output_files=output_files)
