"""Exception hierarchy shared by every module of the package."""


class WKellyError(Exception):
    """Base class for all package errors."""


class ValidationError(WKellyError, ValueError):
    """Input violates a documented precondition."""


class NegativeWeight(ValidationError):
    pass


class SumMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class UnsupportedOrder(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class Ruin(ValidationError):
    """Portfolio absolute return dropped to zero or below."""

    def __init__(self, period: int, gross: float):
        super().__init__(f"ruin at period {period}: gross return {gross:.6g} <= 0")
        self.period = period
        self.gross = gross


class ParseError(ValidationError):
    """Malformed input file. Carries the location of the offending cell."""

    def __init__(self, message: str, path=None, line: int | None = None, column: str | None = None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.column = column


class MissingValue(ParseError):
    pass


class NonPositivePrice(ParseError):
    pass


class NonMonotoneDates(ParseError):
    pass


class NumericFailure(WKellyError):
    """An inner numerical routine did not converge."""


class BracketTooNarrow(NumericFailure):
    pass


class SolverFailure(WKellyError):
    """Optimizer stopped before certifying optimality.

    ``solution`` holds the best iterate found, with its status set.
    """

    def __init__(self, message: str, solution=None):
        super().__init__(message)
        self.solution = solution
