"""Time-windowed decentralization metrics for crypto-ecosystem subsystems.

The package turns raw entity-contribution events (blocks, commits,
volumes, TVL, token balances) into per-window contribution distributions,
computes decentralization metrics over them, and runs knockout and
correlation analyses, emitting longitudinal panel data.
"""

from .aggregation import MetricSeries, SubsystemDescriptor, build_panel, window_aggregate
from .analysis import (
    CorrelationReport,
    KnockoutResult,
    MetricSnapshot,
    knockout,
    knockout_series,
    pearson,
    regularized_incomplete_beta,
    student_t_two_sided_p,
)
from .attribution import (
    BuilderTransfer,
    RewardPayout,
    RewardRecipient,
    attribute_proportional,
    attribute_single,
    load_builder_labels,
    resolve_pbs_proposer,
)
from .errors import (
    DecentMetricsError,
    EmptyDistributionError,
    EmptyFileError,
    InsufficientDataError,
    InvalidAlphaError,
    InvalidParamsError,
    LengthMismatchError,
    MissingProducerError,
    NegativeCountError,
    SchemaMismatchError,
    ZeroVarianceError,
)
from .estimators import DecentralizationPanel, NakamotoKnockout
from .fixtures import gen_fixture
from .io import ingest
from .metrics import (
    DEFAULT_NAKAMOTO_THRESHOLD,
    METRIC_KINDS,
    NakamotoPartition,
    gini,
    hhi,
    nakamoto,
    nakamoto_coefficient,
    node_count,
    renyi_entropy,
    shannon_entropy,
)
from .model import (
    UNKNOWN_ENTITY,
    ContributionDistribution,
    ContributionRecord,
    Granularity,
    SubsystemKind,
    TimeWindow,
    normalize,
)
from .pipeline import RunConfig, RunResult, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BuilderTransfer",
    "ContributionDistribution",
    "ContributionRecord",
    "CorrelationReport",
    "DecentMetricsError",
    "DecentralizationPanel",
    "DEFAULT_NAKAMOTO_THRESHOLD",
    "EmptyDistributionError",
    "EmptyFileError",
    "Granularity",
    "InsufficientDataError",
    "InvalidAlphaError",
    "InvalidParamsError",
    "KnockoutResult",
    "LengthMismatchError",
    "METRIC_KINDS",
    "MetricSeries",
    "MetricSnapshot",
    "MissingProducerError",
    "NakamotoKnockout",
    "NakamotoPartition",
    "NegativeCountError",
    "RewardPayout",
    "RewardRecipient",
    "RunConfig",
    "RunResult",
    "SchemaMismatchError",
    "SubsystemDescriptor",
    "SubsystemKind",
    "TimeWindow",
    "UNKNOWN_ENTITY",
    "ZeroVarianceError",
    "attribute_proportional",
    "attribute_single",
    "build_panel",
    "gen_fixture",
    "gini",
    "hhi",
    "ingest",
    "knockout",
    "knockout_series",
    "load_builder_labels",
    "nakamoto",
    "nakamoto_coefficient",
    "node_count",
    "normalize",
    "pearson",
    "regularized_incomplete_beta",
    "renyi_entropy",
    "resolve_pbs_proposer",
    "run_pipeline",
    "shannon_entropy",
    "student_t_two_sided_p",
    "window_aggregate",
]
