"""Exception types raised across the package."""


class SvtError(Exception):
    """Base class for all package errors."""


class DimensionError(SvtError, ValueError):
    """Operand shapes do not agree."""


class SizeCapError(SvtError, ValueError):
    """An operation would densify or factor a matrix beyond its configured cap."""


class NumericalFailure(SvtError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class MatrixMarketError(SvtError, ValueError):
    """Malformed MatrixMarket input. Carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
