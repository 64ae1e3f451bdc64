"""Exception hierarchy shared across the package.

Error classes map onto the service/CLI error contract: invalid inputs and
configuration are distinguished from numeric failures discovered during a
computation (exit code 2 vs 3 at the CLI, HTTP 4xx vs 5xx at the service).
"""

from __future__ import annotations


class InfluenceKitError(Exception):
    """Base class for all package errors."""

    code = "error"


class InvalidArgumentError(InfluenceKitError, ValueError):
    """A caller-supplied argument is outside the documented domain."""

    code = "invalid-argument"


class InsufficientDataError(InvalidArgumentError):
    """An operation needs more observations than were supplied."""

    code = "insufficient-data"


class UnsupportedRepresentationError(InvalidArgumentError):
    """A functional was evaluated on a distribution representation it cannot handle."""

    code = "unsupported-representation"


class NumericFailureError(InfluenceKitError):
    """A numeric routine failed to converge or produced an unusable result."""

    code = "numeric-failure"


class QuadratureError(NumericFailureError):
    """Adaptive quadrature did not reach the requested tolerance."""

    code = "numeric-failure"


class RankDeficiencyError(NumericFailureError):
    """A moment or design matrix is numerically singular."""

    code = "rank-deficiency"

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class TableFailureError(NumericFailureError):
    """Too many per-point failures while building an influence table."""

    code = "table-failure"
