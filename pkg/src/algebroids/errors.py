"""Exception hierarchy shared across the package."""


class AlgebroidError(Exception):
    """Base class for all package-specific errors."""


class ChartMismatchError(AlgebroidError):
    """Two objects living on different charts were combined."""


class DegreeOverflowError(AlgebroidError):
    """A product would exceed the configured total-degree cap."""


class ParseError(AlgebroidError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"at position {position}: {message}")
        self.position = position
        self.bare_message = message


class ValidationError(AlgebroidError):
    """Structurally invalid input data (bad matrix shapes, charts, ...)."""


class UnsupportedModeError(AlgebroidError):
    """A pullback/construction was requested outside the supported modes."""


class TruncationError(AlgebroidError):
    """An operation escaped the truncated grading window."""
