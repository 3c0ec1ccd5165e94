"""Exception hierarchy shared by the modeling library, file stores and CLI."""

from typing import Optional


class SurrogateError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SurrogateError, ValueError):
    """A parameter or flag is outside its valid range."""


class DataParseError(SurrogateError, ValueError):
    """Input file content could not be parsed.

    `line` is the 1-based line number in the source file when known.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(f"{message}{where}")


class DegenerateChannelError(SurrogateError, ValueError):
    """A channel has zero variance where a nondegenerate one is required."""

    def __init__(self, channel: str, message: str = "channel has zero variance"):
        self.channel = channel
        super().__init__(f"{message}: {channel}")


class ConditioningError(SurrogateError, ArithmeticError):
    """A linear system is numerically singular."""

    def __init__(self, message: str, condition_number: float = float("inf")):
        self.condition_number = condition_number
        super().__init__(f"{message} (condition number {condition_number:.3e})")


class FitError(SurrogateError, RuntimeError):
    """A fit could not be carried out on the given data."""


class IntegrationError(SurrogateError, RuntimeError):
    """Time integration produced a non-finite state."""

    def __init__(self, message: str, time: float):
        self.time = time
        super().__init__(f"{message} at t={time:g}")


class ModelFileError(SurrogateError, ValueError):
    """A model or manifest file violates its schema or a type invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
