"""Exception types shared across the package.

Everything derives from ValueError or RuntimeError so callers that do not
care about the distinction can still catch the usual built-ins.
"""


class DimensionError(ValueError):
    """A state, matrix or geometry does not match the expected shape."""


class CapacityError(ValueError):
    """An exact operation was requested above the enumeration bound."""


class FormatError(ValueError):
    """A file does not conform to one of the text formats.

    Carries the offending line number when one is known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingError(RuntimeError):
    """Training failed to converge; ``accuracy`` holds the final value."""

    def __init__(self, message: str, accuracy: float):
        self.accuracy = accuracy
        super().__init__(f"{message} (final accuracy {accuracy:.4f})")
