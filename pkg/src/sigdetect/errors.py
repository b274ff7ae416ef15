"""Exception types shared across the package."""


class SigdetectError(Exception):
    """Base class for all package-specific errors."""


class NonIncreasingTime(SigdetectError):
    """Timestamps are not strictly increasing."""


class InsufficientData(SigdetectError):
    """Series too short for the requested operation."""


class CountOverflow(SigdetectError):
    """Coefficient count exceeds the platform integer range."""


class DegenerateLabels(SigdetectError):
    """Labels contain a single class where both are required."""


class SingularCovariance(SigdetectError):
    """Scatter matrix is not positive definite."""


class InsufficientSamples(SigdetectError):
    """Too few samples for a reliable covariance estimate (n <= m^2)."""


class ParseError(SigdetectError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyFile(SigdetectError):
    """Input file contains no data rows."""
