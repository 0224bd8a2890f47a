"""Attribution of consensus artifacts to entities.

Bitcoin-style blocks split credit proportionally across every reward
recipient (mining pools paying members in the coinbase get partial
credit); other chains credit a single producer per block. Post-PBS
Ethereum blocks pay the builder, not the proposer, so the proposer is
recovered from the builder-to-proposer transfer extracted upstream.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, List, Optional, Sequence, Tuple

from .errors import MissingProducerError, NegativeCountError
from .exactsum import add_partial, partials_total
from .model import UNKNOWN_ENTITY, validate_entity_id

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardRecipient:
    """One payout line of a block reward.

    ``raw_pubkey`` flags early-Bitcoin outputs paying a bare public key
    instead of an address; those are unattributable and map to Unknown.
    """

    address: str
    amount: float
    raw_pubkey: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "address", validate_entity_id(self.address))
        amount = float(self.amount)
        if not math.isfinite(amount) or amount < 0:
            raise NegativeCountError(f"reward amount {self.amount!r} must be finite and >= 0")
        object.__setattr__(self, "amount", amount)


@dataclass(frozen=True)
class RewardPayout:
    """All reward recipients of one block."""

    block_id: str
    recipients: Tuple[RewardRecipient, ...]

    def __post_init__(self) -> None:
        if not self.recipients:
            raise ValueError(f"block {self.block_id!r} has no recipients")


@dataclass(frozen=True)
class BuilderTransfer:
    """Fee recipient of a block plus the builder-to-proposer transfer, if any."""

    block_id: str
    fee_recipient: str
    transfer_to: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fee_recipient", validate_entity_id(self.fee_recipient))
        if self.transfer_to is not None:
            object.__setattr__(self, "transfer_to", validate_entity_id(self.transfer_to))


def attribute_proportional(payout: RewardPayout) -> List[Tuple[str, float]]:
    """Split one block's attribution across recipients by reward share.

    Per-block weights always sum to 1. Raw-pubkey recipients are credited
    to Unknown. A zero-reward block cannot be split, so the whole block
    goes to Unknown with weight 1 (under-estimating decentralization
    beats dropping the block).
    """
    total = math.fsum(r.amount for r in payout.recipients)
    if total == 0:
        logger.warning(
            "block %s has zero total reward; attributing to %s",
            payout.block_id,
            UNKNOWN_ENTITY,
        )
        return [(UNKNOWN_ENTITY, 1.0)]
    return [
        (UNKNOWN_ENTITY if r.raw_pubkey else r.address, r.amount / total)
        for r in payout.recipients
    ]


def attribute_single(payout: RewardPayout) -> Tuple[str, float]:
    """Credit the full block to its one producer.

    Raises MissingProducerError unless the payout names exactly one
    candidate address.
    """
    if len(payout.recipients) != 1:
        raise MissingProducerError(
            f"block {payout.block_id!r} needs exactly one producer, got {len(payout.recipients)}"
        )
    recipient = payout.recipients[0]
    entity = UNKNOWN_ENTITY if recipient.raw_pubkey else recipient.address
    return entity, 1.0


def resolve_pbs_proposer(transfer: BuilderTransfer, builder_labels: AbstractSet[str]) -> str:
    """Recover the block proposer behind a possibly builder-owned fee recipient.

    A fee recipient that is a labeled builder forwards credit to the
    transfer target; with no recorded transfer the builder proposed its
    own block and keeps the credit. Unlabeled fee recipients are
    proposers already.
    """
    if transfer.fee_recipient in builder_labels and transfer.transfer_to is not None:
        return transfer.transfer_to
    return transfer.fee_recipient


def select_proposer_transfer(
    transfers: Sequence[Tuple[str, float]],
) -> Optional[str]:
    """Pick the proposer payment among several transfers in one block.

    The largest transfer wins (the dominant payment is the proposer
    payment); ties go to the lexicographically smallest recipient so the
    choice never depends on row order.
    """
    if not transfers:
        return None
    merged: dict[str, list[float]] = {}
    for recipient, amount in transfers:
        add_partial(merged.setdefault(validate_entity_id(recipient), []), float(amount))
    totals = {recipient: partials_total(p) for recipient, p in merged.items()}
    return min(totals, key=lambda recipient: (-totals[recipient], recipient))


def load_builder_labels(path: str | Path) -> frozenset[str]:
    """Read a builder-address labels file: one address per line, # comments."""
    labels = set()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.split("#", 1)[0].strip()
            if line:
                labels.add(line)
    return frozenset(labels)
