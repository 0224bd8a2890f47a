"""File ingestion and panel export.

Input files are delimited UTF-8 text (comma or tab, sniffed from the
header) with one mandatory header row. Each subsystem has a fixed column
contract; unknown columns are ignored with a warning. Consensus files
come in three shapes, distinguished by their columns:

* producer rows:  timestamp, block_id, producer            (one block per row)
* reward rows:    timestamp, block_id, recipient, amount   (one payout line per
                  row, optional boolean ``pubkey`` column; rows are grouped per
                  block and split proportionally)
* PBS rows:       timestamp, block_id, fee_recipient, optional transfer_to and
                  transfer_amount; rows are grouped per block and the proposer
                  is resolved through the builder labels file

Malformed rows are never silently dropped: every skipped row lands in a
per-file counter with a reason, and rows_in = rows_used + rows_skipped.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .aggregation import MetricSeries
from .attribution import (
    BuilderTransfer,
    RewardPayout,
    RewardRecipient,
    attribute_proportional,
    resolve_pbs_proposer,
    select_proposer_transfer,
)
from .errors import EmptyFileError, NegativeCountError, SchemaMismatchError
from .model import ContributionRecord, SubsystemKind, check_timestamp

logger = logging.getLogger(__name__)

#: Time column per subsystem; monthly subsystems accept ``YYYY-MM``.
TIME_COLUMNS = {
    SubsystemKind.CONSENSUS: "timestamp",
    SubsystemKind.DEVELOPMENT: "month",
    SubsystemKind.EXCHANGES: "month",
    SubsystemKind.DEFI_TVL: "date",
    SubsystemKind.DEFI_GOVERNANCE: "date",
    SubsystemKind.NFT_MARKETPLACES: "date",
}

#: (entity column, weight column) for the single-table subsystems.
SIMPLE_COLUMNS = {
    SubsystemKind.DEVELOPMENT: ("developer", "commits"),
    SubsystemKind.EXCHANGES: ("exchange", "usd_volume"),
    SubsystemKind.DEFI_TVL: ("protocol", "tvl_usd"),
    SubsystemKind.DEFI_GOVERNANCE: ("wallet", "token_balance"),
    SubsystemKind.NFT_MARKETPLACES: ("marketplace", "usd_volume"),
}

_TRUTHY = {"1", "true", "t", "yes", "y"}
_FALSY = {"", "0", "false", "f", "no", "n"}


@dataclass
class IngestStats:
    """Row accounting for one ingested file."""

    path: str
    rows_in: int = 0
    rows_used: int = 0
    skipped: Counter = field(default_factory=Counter)
    warnings: List[str] = field(default_factory=list)

    @property
    def rows_skipped(self) -> int:
        return sum(self.skipped.values())

    def as_dict(self) -> dict:
        return {
            "path": self.path,
            "rows_in": self.rows_in,
            "rows_used": self.rows_used,
            "rows_skipped": self.rows_skipped,
            "skipped": {reason: self.skipped[reason] for reason in sorted(self.skipped)},
            "warnings": list(self.warnings),
        }


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO timestamp, bare date, ``YYYY-MM`` month, or epoch seconds."""
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.isdigit():
        dt = datetime.fromtimestamp(int(s), tz=timezone.utc)
    else:
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        if len(s) == 7 and s[4] == "-":
            s += "-01"
        dt = datetime.fromisoformat(s)
    return check_timestamp(dt)


def _parse_weight(text: str) -> float:
    value = float(text)
    if not math.isfinite(value) or value < 0:
        raise NegativeCountError(f"weight {text!r} must be finite and >= 0")
    return value


def _parse_flag(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUTHY:
        return True
    if lowered in _FALSY:
        return False
    raise ValueError(f"not a boolean flag: {text!r}")


def _sniff_header(path: Path) -> Tuple[List[str], str]:
    with open(path, encoding="utf-8-sig", newline="") as handle:
        first = handle.readline()
    if not first.strip():
        raise EmptyFileError(f"{path}: no header row")
    delimiter = "\t" if "\t" in first else ","
    header = next(csv.reader([first], delimiter=delimiter))
    return [column.strip() for column in header], delimiter


def _column_index(header: Sequence[str], expected: Sequence[str], path: Path) -> Dict[str, int]:
    index = {}
    for column in expected:
        if column not in header:
            raise SchemaMismatchError(f"{path}: required column {column!r} missing")
        index[column] = header.index(column)
    return index


def _consensus_variant(header: Sequence[str], path: Path) -> str:
    present = []
    if "producer" in header:
        present.append("producer")
    if "recipient" in header and "amount" in header:
        present.append("rewards")
    if "fee_recipient" in header:
        present.append("pbs")
    if not present:
        raise SchemaMismatchError(
            f"{path}: consensus file needs producer, recipient+amount, or fee_recipient columns"
        )
    if len(present) > 1:
        raise SchemaMismatchError(f"{path}: ambiguous consensus schema, found {present}")
    return present[0]


def ingest(
    path: str | Path,
    subsystem: SubsystemKind,
    builder_labels: frozenset[str] = frozenset(),
    stats: Optional[IngestStats] = None,
) -> Iterator[ContributionRecord]:
    """Stream contribution records out of one delimited file.

    Header problems (missing file, empty file, schema mismatch) raise
    immediately; row-level problems are counted into ``stats`` and the
    row is skipped. The returned iterator is lazy, so ``stats`` is only
    complete once it is exhausted.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    if stats is None:
        stats = IngestStats(path=str(path))

    header, delimiter = _sniff_header(path)
    time_column = TIME_COLUMNS[subsystem]

    if subsystem is SubsystemKind.CONSENSUS:
        variant = _consensus_variant(header, path)
        if variant == "producer":
            required = [time_column, "block_id", "producer"]
            optional = []
        elif variant == "rewards":
            required = [time_column, "block_id", "recipient", "amount"]
            optional = ["pubkey"]
        else:
            required = [time_column, "block_id", "fee_recipient"]
            optional = ["transfer_to", "transfer_amount"]
    else:
        variant = "simple"
        entity_column, weight_column = SIMPLE_COLUMNS[subsystem]
        required = [time_column, entity_column, weight_column]
        optional = []

    index = _column_index(header, required, path)
    for column in optional:
        if column in header:
            index[column] = header.index(column)
    unknown = [column for column in header if column not in required + optional]
    if unknown:
        message = f"ignoring unknown columns {unknown}"
        stats.warnings.append(message)
        logger.warning("%s: %s", path, message)

    if variant == "simple":
        return _iter_simple(path, delimiter, subsystem, index, stats)
    if variant == "producer":
        return _iter_producer(path, delimiter, index, stats)
    if variant == "rewards":
        return _iter_rewards(path, delimiter, index, stats)
    return _iter_pbs(path, delimiter, index, stats, builder_labels)


def _data_rows(path: Path, delimiter: str) -> Iterator[List[str]]:
    with open(path, encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        next(reader, None)
        for row in reader:
            if row and any(cell.strip() for cell in row):
                yield row


def _cell(row: Sequence[str], index: int) -> str:
    if index >= len(row):
        raise IndexError("short row")
    return row[index].strip()


def _iter_simple(path, delimiter, subsystem, index, stats) -> Iterator[ContributionRecord]:
    time_column = TIME_COLUMNS[subsystem]
    entity_column, weight_column = SIMPLE_COLUMNS[subsystem]
    for row in _data_rows(path, delimiter):
        stats.rows_in += 1
        try:
            ts = parse_timestamp(_cell(row, index[time_column]))
            entity = _cell(row, index[entity_column])
            weight = _parse_weight(_cell(row, index[weight_column]))
            record = ContributionRecord(ts, entity, subsystem, weight)
        except IndexError:
            stats.skipped["short_row"] += 1
            continue
        except NegativeCountError:
            stats.skipped["bad_weight"] += 1
            continue
        except (ValueError, OverflowError, OSError):
            stats.skipped["bad_value"] += 1
            continue
        stats.rows_used += 1
        yield record


def _iter_producer(path, delimiter, index, stats) -> Iterator[ContributionRecord]:
    for row in _data_rows(path, delimiter):
        stats.rows_in += 1
        try:
            ts = parse_timestamp(_cell(row, index["timestamp"]))
            block_id = _cell(row, index["block_id"])
            if not block_id:
                raise ValueError("empty block_id")
            producer = _cell(row, index["producer"])
            record = ContributionRecord(ts, producer, SubsystemKind.CONSENSUS, 1.0)
        except IndexError:
            stats.skipped["short_row"] += 1
            continue
        except (ValueError, OverflowError, OSError):
            stats.skipped["bad_value"] += 1
            continue
        stats.rows_used += 1
        yield record


def _iter_rewards(path, delimiter, index, stats) -> Iterator[ContributionRecord]:
    blocks: Dict[str, dict] = {}
    for row in _data_rows(path, delimiter):
        stats.rows_in += 1
        try:
            ts = parse_timestamp(_cell(row, index["timestamp"]))
            block_id = _cell(row, index["block_id"])
            if not block_id:
                raise ValueError("empty block_id")
            raw_pubkey = False
            if "pubkey" in index:
                raw_pubkey = _parse_flag(_cell(row, index["pubkey"]))
            recipient = RewardRecipient(
                address=_cell(row, index["recipient"]),
                amount=_parse_weight(_cell(row, index["amount"])),
                raw_pubkey=raw_pubkey,
            )
        except IndexError:
            stats.skipped["short_row"] += 1
            continue
        except NegativeCountError:
            stats.skipped["bad_weight"] += 1
            continue
        except (ValueError, OverflowError, OSError):
            stats.skipped["bad_value"] += 1
            continue
        block = blocks.setdefault(block_id, {"ts": ts, "recipients": [], "rows": 0})
        block["ts"] = min(block["ts"], ts)
        block["recipients"].append(recipient)
        block["rows"] += 1

    for block_id in sorted(blocks):
        block = blocks[block_id]
        stats.rows_used += block["rows"]
        payout = RewardPayout(block_id=block_id, recipients=tuple(block["recipients"]))
        for entity, share in attribute_proportional(payout):
            yield ContributionRecord(block["ts"], entity, SubsystemKind.CONSENSUS, share)


def _iter_pbs(path, delimiter, index, stats, builder_labels) -> Iterator[ContributionRecord]:
    blocks: Dict[str, dict] = {}
    for row in _data_rows(path, delimiter):
        stats.rows_in += 1
        try:
            ts = parse_timestamp(_cell(row, index["timestamp"]))
            block_id = _cell(row, index["block_id"])
            if not block_id:
                raise ValueError("empty block_id")
            fee_recipient = _cell(row, index["fee_recipient"])
            if not fee_recipient:
                raise ValueError("empty fee_recipient")
            transfer_to = ""
            if "transfer_to" in index:
                transfer_to = _cell(row, index["transfer_to"])
            amount = 0.0
            if transfer_to and "transfer_amount" in index:
                cell = _cell(row, index["transfer_amount"])
                if cell:
                    amount = _parse_weight(cell)
        except IndexError:
            stats.skipped["short_row"] += 1
            continue
        except NegativeCountError:
            stats.skipped["bad_weight"] += 1
            continue
        except (ValueError, OverflowError, OSError):
            stats.skipped["bad_value"] += 1
            continue
        block = blocks.setdefault(
            block_id, {"ts": ts, "fee_recipient": fee_recipient, "transfers": [], "rows": 0}
        )
        block["ts"] = min(block["ts"], ts)
        block["rows"] += 1
        if block["fee_recipient"] != fee_recipient:
            block["conflict"] = True
        if transfer_to:
            block["transfers"].append((transfer_to, amount))

    for block_id in sorted(blocks):
        block = blocks[block_id]
        if block.get("conflict"):
            stats.skipped["inconsistent_fee_recipient"] += block["rows"]
            logger.warning("%s: block %s has conflicting fee recipients; skipped", path, block_id)
            continue
        stats.rows_used += block["rows"]
        transfer = BuilderTransfer(
            block_id=block_id,
            fee_recipient=block["fee_recipient"],
            transfer_to=select_proposer_transfer(block["transfers"]),
        )
        proposer = resolve_pbs_proposer(transfer, builder_labels)
        yield ContributionRecord(block["ts"], proposer, SubsystemKind.CONSENSUS, 1.0)


def format_value(value: float) -> str:
    """Pinned numeric formatting for output CSVs."""
    return f"{value:.12g}"


def write_series_csv(series: MetricSeries, path: str | Path) -> None:
    """Write one metric series as ``window_start,value`` rows."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["window_start", "value"])
        for window, value in series.points:
            writer.writerow([window.start_date, format_value(value)])


def write_json(payload: dict, path: str | Path) -> None:
    """Write deterministic JSON (sorted keys, trailing newline)."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
