"""Exception types raised across the package."""

from __future__ import annotations


class DecentMetricsError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDistributionError(DecentMetricsError):
    """All counts were zero, or no entries were supplied."""


class NegativeCountError(DecentMetricsError):
    """A contribution count or reward amount was negative or non-finite."""


class InvalidAlphaError(DecentMetricsError):
    """Renyi order must be a finite number >= 0."""


class MissingProducerError(DecentMetricsError):
    """Single-producer attribution needs exactly one candidate address."""


class InsufficientDataError(DecentMetricsError):
    """Fewer samples than the statistic requires."""


class ZeroVarianceError(DecentMetricsError):
    """Correlation input series has no variance."""


class LengthMismatchError(DecentMetricsError):
    """Paired series have different lengths."""


class SchemaMismatchError(DecentMetricsError):
    """Input file is missing a required column for its subsystem."""


class EmptyFileError(DecentMetricsError):
    """Input file or directory contains no data."""


class InvalidParamsError(DecentMetricsError):
    """Fixture or run parameters are out of range."""
