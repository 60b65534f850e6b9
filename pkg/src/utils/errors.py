# src/utils/errors.py
"""
Exception hierarchy shared by every package.

All library errors derive from RidgelineError so the CLI can map them to a
single exit code without swallowing programming errors.
"""

from typing import Optional


class RidgelineError(Exception):
    """Base class for all library errors."""


class InvalidInputError(RidgelineError, ValueError):
    """Shape, range or finiteness violation in a caller-supplied value."""


class DatasetParseError(RidgelineError):
    """Malformed dataset CSV. The message always names the offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class SingularSystemError(RidgelineError):
    """A factor or normal matrix is singular (or numerically so)."""

    def __init__(self, message: str, coordinate: Optional[int] = None):
        super().__init__(message)
        self.coordinate = coordinate


class EstimationError(RidgelineError):
    """Hyperparameter or parameter estimation failed."""


class ConfigError(RidgelineError):
    """Run configuration is invalid."""


class RankDeficiencyWarning(UserWarning):
    """Least-squares problem was rank deficient; a minimum-norm solution was used."""
