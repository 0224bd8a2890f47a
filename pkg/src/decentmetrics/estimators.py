"""scikit-learn style transformers over contribution record streams.

Both transformers are stateless: ``fit`` only validates parameters, and
``transform`` accepts anything ``check_records`` understands (a DataFrame
with timestamp/entity/weight columns, ContributionRecords, mappings, or
triples) and returns a window-indexed DataFrame. ``get_params`` and
``set_params`` come from ``BaseEstimator``, so they drop into sklearn
pipelines and grid search like any other transformer.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .aggregation import SubsystemDescriptor, build_panel, window_aggregate
from .analysis import knockout
from .metrics import DEFAULT_NAKAMOTO_THRESHOLD
from .model import Granularity, SubsystemKind
from .validation import (
    RecordsLike,
    check_alphas,
    check_records,
    check_subsystem,
    check_threshold,
)

DEFAULT_PANEL_METRICS = ("shannon_entropy", "gini", "nakamoto", "hhi", "node_count")


class DecentralizationPanel(TransformerMixin, BaseEstimator):
    """Transform contribution records into a per-window metric panel.

    Output is a DataFrame indexed by window start (UTC) with one column
    per metric label; windows where a metric could not be evaluated hold
    NaN. Missing windows are absent rows, not zeros.

    Parameters
    ----------
    subsystem : str or SubsystemKind, default "consensus"
        Determines entity/weight semantics and the default window size.
    metrics : sequence of str
        Metric kinds to compute; ``renyi_entropy`` expands per alpha.
    alphas : sequence of float
        Renyi orders, required when ``renyi_entropy`` is requested.
    nakamoto_threshold : float, default 0.51
        Control threshold for the Nakamoto coefficient.
    granularity : "daily" | "monthly" | None
        Overrides the subsystem default; may only widen.
    ecosystem : str
        Free-form tag carried into the series descriptors.
    """

    def __init__(
        self,
        subsystem: Union[str, SubsystemKind] = "consensus",
        metrics: Sequence[str] = DEFAULT_PANEL_METRICS,
        alphas: Sequence[float] = (),
        nakamoto_threshold: float = DEFAULT_NAKAMOTO_THRESHOLD,
        granularity: Optional[str] = None,
        ecosystem: str = "",
    ):
        self.subsystem = subsystem
        self.metrics = metrics
        self.alphas = alphas
        self.nakamoto_threshold = nakamoto_threshold
        self.granularity = granularity
        self.ecosystem = ecosystem

    def _descriptor(self) -> SubsystemDescriptor:
        granularity = Granularity(self.granularity) if self.granularity else None
        return SubsystemDescriptor(
            ecosystem=self.ecosystem,
            subsystem=check_subsystem(self.subsystem),
            granularity=granularity,
        )

    def fit(self, X: Optional[RecordsLike] = None, y=None):
        """Validate parameters; no state is learned from the data."""
        self.descriptor_ = self._descriptor()
        check_threshold(self.nakamoto_threshold)
        check_alphas(self.alphas)
        return self

    def transform(self, X: RecordsLike) -> pd.DataFrame:
        descriptor = self._descriptor()
        records = check_records(X, descriptor.subsystem)
        distributions = window_aggregate(records, descriptor)
        panel = build_panel(
            distributions,
            self.metrics,
            descriptor,
            alphas=check_alphas(self.alphas),
            threshold=check_threshold(self.nakamoto_threshold),
        )
        columns = {}
        for series in panel:
            columns[series.metric] = pd.Series(
                {pd.Timestamp(w.start) : v for w, v in series.points}, dtype=np.float64
            )
        frame = pd.DataFrame(columns)
        frame.index.name = "window_start"
        return frame.sort_index()


class NakamotoKnockout(TransformerMixin, BaseEstimator):
    """Per-window knockout study of the Nakamoto set.

    For every window: metrics of the full distribution (``pre_*``), the
    Nakamoto set size (``removed``), and metrics of the renormalized
    remainder (``post_*``, NaN where the knockout removed everything).
    """

    _FIELDS = ("shannon_entropy", "nakamoto", "hhi", "node_count")

    def __init__(
        self,
        subsystem: Union[str, SubsystemKind] = "consensus",
        threshold: float = DEFAULT_NAKAMOTO_THRESHOLD,
        granularity: Optional[str] = None,
        ecosystem: str = "",
    ):
        self.subsystem = subsystem
        self.threshold = threshold
        self.granularity = granularity
        self.ecosystem = ecosystem

    def fit(self, X: Optional[RecordsLike] = None, y=None):
        """Validate parameters; no state is learned from the data."""
        check_subsystem(self.subsystem)
        check_threshold(self.threshold)
        return self

    def transform(self, X: RecordsLike) -> pd.DataFrame:
        subsystem = check_subsystem(self.subsystem)
        granularity = Granularity(self.granularity) if self.granularity else None
        descriptor = SubsystemDescriptor(
            ecosystem=self.ecosystem, subsystem=subsystem, granularity=granularity
        )
        records = check_records(X, subsystem)
        distributions = window_aggregate(records, descriptor)
        threshold = check_threshold(self.threshold)
        rows = []
        index = []
        for dist in distributions:
            result = knockout(dist, threshold)
            row = {
                "pre_shannon_entropy": result.pre.shannon_entropy,
                "pre_nakamoto": float(result.pre.nakamoto_coefficient),
                "pre_hhi": result.pre.hhi,
                "pre_node_count": float(result.pre.node_count),
                "removed": float(result.removed.coefficient),
            }
            if result.post is not None:
                row.update(
                    post_shannon_entropy=result.post.shannon_entropy,
                    post_nakamoto=float(result.post.nakamoto_coefficient),
                    post_hhi=result.post.hhi,
                    post_node_count=float(result.post.node_count),
                )
            else:
                row.update(
                    post_shannon_entropy=np.nan,
                    post_nakamoto=np.nan,
                    post_hhi=np.nan,
                    post_node_count=np.nan,
                )
            rows.append(row)
            index.append(pd.Timestamp(dist.window.start))
        frame = pd.DataFrame(rows, index=pd.Index(index, name="window_start"))
        return frame.sort_index()
