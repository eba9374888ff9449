"""Exception taxonomy shared across the package.

Two branches: :class:`DataError` for problems with the input data or
configuration (CLI exit code 2) and :class:`NumericalError` for
computations whose result is undefined or unattainable (exit code 3).
"""

from __future__ import annotations

__all__ = [
    "ThresholdToolError",
    "DataError",
    "SchemaError",
    "DuplicateClassError",
    "EmptyInputError",
    "InsufficientDataError",
    "DegenerateOutcomeError",
    "ConfigError",
    "FixtureLookupError",
    "NumericalError",
    "ConvergenceError",
    "RiskOverflowError",
    "NonPositiveSlopeError",
    "DomainError",
    "DegeneratePopulationError",
    "UndefinedCorrelationError",
    "SingularDesignError",
    "UndefinedMeasureError",
    "UnsupportedDesignError",
]


class ThresholdToolError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 1


class DataError(ThresholdToolError):
    """Input data or configuration is unusable as given."""

    exit_code = 2


class SchemaError(DataError):
    """An input file does not match the declared column schema."""


class DuplicateClassError(DataError):
    """The same class name appears twice within one system version."""


class EmptyInputError(DataError):
    """An input source contains no usable rows."""


class InsufficientDataError(DataError):
    """Fewer observations than the operation needs."""


class DegenerateOutcomeError(DataError):
    """Outcome labels are all identical, so no model can be fitted."""


class ConfigError(DataError):
    """A configuration value is missing, malformed, or out of range."""


class FixtureLookupError(DataError):
    """A bundled fixture does not contain the requested entry."""


class NumericalError(ThresholdToolError):
    """A computation failed or its result is undefined."""

    exit_code = 3


class ConvergenceError(NumericalError):
    """Iterative optimisation did not reach the tolerance in time."""


class RiskOverflowError(NumericalError):
    """The acceptable risk level reached or exceeded 1."""


class NonPositiveSlopeError(NumericalError):
    """A threshold was requested from a fit with slope <= 0."""


class DomainError(NumericalError):
    """An argument lies outside the mathematical domain of the operation."""


class DegeneratePopulationError(NumericalError):
    """A population-level ratio is 0 or 1, so the correction is undefined."""


class UndefinedCorrelationError(NumericalError):
    """A correlation is undefined because one ranking is constant."""


class SingularDesignError(NumericalError):
    """The design is singular (constant predictor or collinear columns)."""


class UndefinedMeasureError(NumericalError):
    """A performance measure is undefined for the given confusion counts."""


class UnsupportedDesignError(NumericalError):
    """The block design is outside what the rank test supports."""
