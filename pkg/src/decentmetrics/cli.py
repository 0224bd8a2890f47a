"""Command-line interface.

Subcommands: ``ingest-check``, ``compute``, ``knockout``, ``correlate``,
``fixture``. All flags are long-form. Exit codes: 0 on success, 1 on
input errors (missing files, schema mismatches, unusable data), 2 on
configuration errors (argparse uses 2 for bad flags already).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from .aggregation import SubsystemDescriptor, build_panel
from .analysis import CorrelationReport, knockout, knockout_series, pearson
from .errors import (
    DecentMetricsError,
    InsufficientDataError,
    InvalidParamsError,
    ZeroVarianceError,
)
from .fixtures import FIXTURE_KINDS, gen_fixture
from .io import IngestStats, format_value, ingest, write_json
from .metrics import DEFAULT_NAKAMOTO_THRESHOLD, METRIC_KINDS
from .model import SubsystemKind
from .pipeline import (
    DEFAULT_METRICS,
    RunConfig,
    aggregate_inputs,
    config_from_sources,
    expand_input_files,
    load_config_file,
    parse_input_spec,
    parse_subsystem,
    run_pipeline,
)

logger = logging.getLogger(__name__)


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--input",
        action="append",
        metavar="SUBSYSTEM:PATH",
        help="input file or directory tagged with its subsystem; repeatable",
    )
    parser.add_argument("--labels", help="builder labels file for PBS consensus inputs")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    _add_input_flags(parser)
    parser.add_argument("--output", help="output directory")
    parser.add_argument("--ecosystem", help="ecosystem name used in output file names")
    parser.add_argument(
        "--granularity", choices=["daily", "monthly"], help="widen the window size"
    )
    parser.add_argument(
        "--nakamoto-threshold", type=float, help="control threshold (default 0.51)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decentmetrics",
        description="Decentralization metric panels over contribution data.",
    )
    parser.add_argument("--verbose", action="store_true", help="log ingest warnings and info")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("ingest-check", help="validate input files and report row counts")
    _add_input_flags(check)
    check.set_defaults(func=cmd_ingest_check)

    compute = commands.add_parser("compute", help="run the metric panel pipeline")
    compute.add_argument("--config", help="flat key=value config file; flags win")
    _add_run_flags(compute)
    compute.add_argument(
        "--metrics",
        help=f"comma-separated metric kinds from: {', '.join(METRIC_KINDS)}",
    )
    compute.add_argument("--alphas", help="comma-separated Renyi orders")
    compute.set_defaults(func=cmd_compute)

    knock = commands.add_parser("knockout", help="Nakamoto-set knockout simulation per window")
    _add_run_flags(knock)
    knock.set_defaults(func=cmd_knockout)

    corr = commands.add_parser("correlate", help="Pearson correlation between two metric series")
    _add_run_flags(corr)
    corr.add_argument("--metric-a", default="shannon_entropy", help="first metric label")
    corr.add_argument("--metric-b", default="node_count", help="second metric label")
    corr.set_defaults(func=cmd_correlate)

    fixture = commands.add_parser("fixture", help="generate a synthetic fixture with ground truth")
    fixture.add_argument("--kind", required=True, choices=list(FIXTURE_KINDS))
    fixture.add_argument("--output", required=True, help="output directory")
    fixture.add_argument("--seed", required=True, type=int, help="deterministic generation seed")
    fixture.add_argument("--subsystem", default="consensus", help="target ingest schema")
    fixture.add_argument("--ecosystem", default="synthetic")
    fixture.add_argument("--start", default="2021-01-01", help="first window start date")
    fixture.add_argument("--entities", type=int, help="entity count (uniform, zipf)")
    fixture.add_argument("--days", type=int, help="number of windows")
    fixture.add_argument("--per-entity", type=int, help="unit contributions per entity per window")
    fixture.add_argument("--exponent", type=float, help="zipf exponent")
    fixture.add_argument("--shares", help="comma-separated duopoly shares")
    fixture.add_argument("--levels", help="comma-separated stepwise entity counts")
    fixture.add_argument("--days-per-level", type=int, help="windows per stepwise level")
    fixture.set_defaults(func=cmd_fixture)
    return parser


def _parse_inputs(args) -> List[Tuple[Path, SubsystemKind]]:
    if not args.input:
        raise InvalidParamsError("at least one --input SUBSYSTEM:PATH is required")
    return [parse_input_spec(spec) for spec in args.input]


def _run_config(args, metrics=DEFAULT_METRICS, alphas=(), require_output=True) -> RunConfig:
    if require_output and not args.output:
        raise InvalidParamsError("--output is required")
    return RunConfig(
        inputs=tuple(_parse_inputs(args)),
        output_dir=Path(args.output) if args.output else Path("."),
        ecosystem=args.ecosystem or "unnamed",
        metrics=metrics,
        alphas=alphas,
        nakamoto_threshold=(
            args.nakamoto_threshold
            if args.nakamoto_threshold is not None
            else DEFAULT_NAKAMOTO_THRESHOLD
        ),
        granularity=_granularity(args),
        labels_file=Path(args.labels) if args.labels else None,
    )


def _granularity(args):
    from .model import Granularity

    return Granularity(args.granularity) if args.granularity else None


def cmd_ingest_check(args) -> int:
    from .attribution import load_builder_labels

    labels = load_builder_labels(args.labels) if args.labels else frozenset()
    files = expand_input_files(_parse_inputs(args))
    for path, kind in files:
        stats = IngestStats(path=str(path))
        records = sum(1 for _ in ingest(path, kind, builder_labels=labels, stats=stats))
        skipped = (
            ", ".join(f"{reason}={stats.skipped[reason]}" for reason in sorted(stats.skipped))
            or "none"
        )
        print(
            f"{path} [{kind.value}]: rows_in={stats.rows_in} rows_used={stats.rows_used} "
            f"skipped={skipped} records={records}"
        )
        for warning in stats.warnings:
            print(f"  warning: {warning}")
    print("ok")
    return 0


def cmd_compute(args) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    flag_values = {
        "input": args.input,
        "output": args.output,
        "ecosystem": args.ecosystem,
        "metrics": args.metrics,
        "alphas": args.alphas,
        "nakamoto_threshold": args.nakamoto_threshold,
        "granularity": args.granularity,
        "labels": args.labels,
    }
    config = config_from_sources(file_values, flag_values)
    result = run_pipeline(config)
    for kind, summary in sorted(result.report["subsystems"].items()):
        print(
            f"{kind}: {summary['windows']} windows, "
            f"{summary['records_used']}/{summary['records_in']} records used, "
            f"{len(summary['gap_windows'])} gap windows"
        )
    for path in result.output_files:
        print(f"wrote {path}")
    return 0


def _report_dict(report: CorrelationReport) -> dict:
    return {
        "series_a": report.series_a,
        "series_b": report.series_b,
        "n": report.n,
        "r": report.r,
        "p_value": report.p_value,
        "degenerate": report.degenerate,
    }


def cmd_knockout(args) -> int:
    config = _run_config(args)
    distributions, _, _ = aggregate_inputs(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    threshold = config.nakamoto_threshold
    for kind, dists in sorted(distributions.items(), key=lambda kv: kv[0].value):
        results = [knockout(d, threshold) for d in dists]
        rows_path = config.output_dir / f"{config.ecosystem}_{kind.value}_knockout.csv"
        _write_knockout_csv(results, rows_path)
        print(f"wrote {rows_path}")
        try:
            entropy_report, nakamoto_report = knockout_series(dists, threshold)
            correlations = {
                "shannon_entropy": _report_dict(entropy_report),
                "nakamoto": _report_dict(nakamoto_report),
            }
            for name, report in correlations.items():
                r = "undefined" if report["r"] is None else format_value(report["r"])
                p = "undefined" if report["p_value"] is None else format_value(report["p_value"])
                print(f"{kind.value} pre/post {name}: r={r} p={p} n={report['n']}")
        except InsufficientDataError as exc:
            correlations = {"error": str(exc)}
            print(f"{kind.value}: correlations unavailable ({exc})")
        corr_path = (
            config.output_dir / f"{config.ecosystem}_{kind.value}_knockout_correlations.json"
        )
        write_json(
            {"threshold": threshold, "correlations": correlations},
            corr_path,
        )
        print(f"wrote {corr_path}")
    return 0


def _write_knockout_csv(results, path) -> None:
    import csv

    fields = ["shannon_entropy", "nakamoto", "hhi", "node_count"]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["window_start"]
            + [f"pre_{f}" for f in fields]
            + [f"post_{f}" for f in fields]
            + ["removed"]
        )
        for result in results:
            pre = result.pre
            row = [
                result.window.start_date,
                format_value(pre.shannon_entropy),
                format_value(pre.nakamoto_coefficient),
                format_value(pre.hhi),
                format_value(pre.node_count),
            ]
            if result.post is not None:
                post = result.post
                row += [
                    format_value(post.shannon_entropy),
                    format_value(post.nakamoto_coefficient),
                    format_value(post.hhi),
                    format_value(post.node_count),
                ]
            else:
                row += ["", "", "", ""]
            row.append(format_value(result.removed.coefficient))
            writer.writerow(row)


def _parse_metric_label(label: str) -> Tuple[str, Optional[float]]:
    if label.startswith("renyi_entropy_a"):
        try:
            return "renyi_entropy", float(label[len("renyi_entropy_a") :])
        except ValueError:
            raise InvalidParamsError(f"bad renyi label {label!r}") from None
    if label == "renyi_entropy":
        raise InvalidParamsError("use the renyi_entropy_a<order> form, e.g. renyi_entropy_a2")
    if label not in METRIC_KINDS:
        raise InvalidParamsError(f"unknown metric {label!r}")
    return label, None


def cmd_correlate(args) -> int:
    from .metrics import series_label

    kind_a, alpha_a = _parse_metric_label(args.metric_a)
    kind_b, alpha_b = _parse_metric_label(args.metric_b)
    label_a = series_label(kind_a, alpha_a)
    label_b = series_label(kind_b, alpha_b)
    metrics = {kind_a, kind_b}
    alphas = tuple(a for a in (alpha_a, alpha_b) if a is not None)

    config = _run_config(args, metrics=tuple(metrics), alphas=alphas, require_output=False)
    distributions, _, _ = aggregate_inputs(config)
    for kind, dists in sorted(distributions.items(), key=lambda kv: kv[0].value):
        descriptor = SubsystemDescriptor(
            ecosystem=config.ecosystem, subsystem=kind, granularity=config.granularity
        )
        panel = build_panel(
            dists, metrics, descriptor, alphas=alphas, threshold=config.nakamoto_threshold
        )
        by_label = {series.metric: dict(series.points) for series in panel}
        series_a = by_label[label_a]
        series_b = by_label[label_b]
        shared = sorted(set(series_a) & set(series_b), key=lambda w: w.start)
        xs = [series_a[w] for w in shared]
        ys = [series_b[w] for w in shared]
        try:
            report = pearson(xs, ys, label_a, label_b)
        except ZeroVarianceError:
            report = CorrelationReport(
                series_a=label_a,
                series_b=label_b,
                n=len(xs),
                r=None,
                p_value=None,
                degenerate=True,
            )
        if report.degenerate:
            print(f"{kind.value}: degenerate (zero variance), n={report.n}")
        else:
            print(
                f"{kind.value}: r={format_value(report.r)} "
                f"p={format_value(report.p_value)} n={report.n}"
            )
        if args.output:
            config.output_dir.mkdir(parents=True, exist_ok=True)
            out = (
                config.output_dir
                / f"{config.ecosystem}_{kind.value}_corr_{label_a}_vs_{label_b}.json"
            )
            write_json(_report_dict(report), out)
            print(f"wrote {out}")
    return 0


def cmd_fixture(args) -> int:
    params = {}
    for name in ("entities", "days", "per_entity", "exponent", "days_per_level"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.shares:
        params["shares"] = tuple(float(s) for s in args.shares.split(","))
    if args.levels:
        params["levels"] = tuple(int(v) for v in args.levels.split(","))
    fixture = gen_fixture(
        args.kind,
        args.output,
        seed=args.seed,
        subsystem=parse_subsystem(args.subsystem),
        ecosystem=args.ecosystem,
        start=args.start,
        **params,
    )
    print(f"wrote {fixture.csv_path}")
    print(f"wrote {fixture.truth_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InvalidParamsError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, DecentMetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
