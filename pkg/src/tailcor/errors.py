"""Exception hierarchy shared by every tailcor module."""

from __future__ import annotations

__all__ = [
    "TailCorError",
    "InvalidInputError",
    "InvalidLevelError",
    "DegenerateScaleError",
    "DegenerateRanksError",
    "DegenerateSideError",
    "TooShortError",
    "PathologicalRegionError",
    "PanelShapeError",
    "UnstableBootstrapError",
    "NotPositiveDefiniteError",
    "UnsupportedError",
    "ParseError",
    "DataError",
    "SchemaError",
]


class TailCorError(ValueError):
    """Base class for all errors raised by tailcor."""


class InvalidInputError(TailCorError):
    """Malformed or out-of-domain input (empty series, bad length, ...)."""


class InvalidLevelError(TailCorError):
    """A probability level outside its admissible range."""


class DegenerateScaleError(TailCorError):
    """A scale (interquantile range) of zero where a positive one is required."""


class DegenerateRanksError(TailCorError):
    """Kendall's tau is undefined because a margin is entirely tied."""


class DegenerateSideError(TailCorError):
    """No observations on the requested side of the center."""


class TooShortError(TailCorError):
    """Series too short to support the requested tail quantile."""


class PathologicalRegionError(TailCorError):
    """Alternative TailCoR requested where TailCoR < 1 and |rho| < 1."""


class PanelShapeError(TailCorError):
    """Panel series are misaligned or the panel is otherwise mis-shaped."""


class UnstableBootstrapError(TailCorError):
    """Too many bootstrap replicates failed."""


class NotPositiveDefiniteError(TailCorError):
    """A dispersion matrix failed its Cholesky factorization."""


class UnsupportedError(TailCorError):
    """The requested operation is not available for this model family."""


class ParseError(TailCorError):
    """Structural problem in an input file (for instance a ragged row)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(TailCorError):
    """A cell holding a missing, non-numeric or non-finite value."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        if row is not None or column is not None:
            message = f"row {row}, column {column!r}: {message}"
        super().__init__(message)


class SchemaError(TailCorError):
    """Header-level problems: duplicate labels, missing date column, ..."""
