"""Exception types raised by the library.

Every error the CLI can surface maps to one of these; anything else is
treated as an internal failure (exit code 2 instead of 1).
"""


class LoadcastError(Exception):
    """Base class for all expected failures."""


class DomainError(LoadcastError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InsufficientDataError(LoadcastError):
    """Not enough observations to perform an estimate."""


class ShapeError(LoadcastError, ValueError):
    """Tensor shape disagreement in the autodiff engine."""


class NonFiniteGradientError(LoadcastError):
    """An optimizer step saw a NaN/inf gradient; carries the parameter name."""


class TrainingDivergedError(LoadcastError):
    """Training produced a non-finite loss or activation."""


class GapReportError(LoadcastError):
    """A series has missing/duplicated hours beyond the two repairable
    clock-change anomalies. ``gaps`` lists (customer_id, date, detail)."""

    def __init__(self, message, gaps=()):
        super().__init__(message)
        self.gaps = list(gaps)


class CalendarRangeError(LoadcastError):
    """A date falls outside the years covered by the holiday table."""


class GridMismatchError(LoadcastError):
    """Per-customer forecast series do not share a common date/hour grid.
    ``customers`` names the offenders."""

    def __init__(self, message, customers=()):
        super().__init__(message)
        self.customers = list(customers)


class UnstableMetricError(LoadcastError):
    """Too many zero actuals for a relative-error metric to be meaningful."""


class IngestError(LoadcastError):
    """Malformed or inconsistent input CSV; carries offending line numbers."""

    def __init__(self, message, lines=()):
        super().__init__(message)
        self.lines = list(lines)


class ConfigError(LoadcastError):
    """Invalid run configuration."""
