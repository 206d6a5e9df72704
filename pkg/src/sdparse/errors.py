"""Exception types shared across the toolkit."""


class SdparseError(Exception):
    """Base class for all toolkit errors."""


class NumericError(SdparseError, ArithmeticError):
    """A computation produced a NaN or infinity."""


class ShapeError(SdparseError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class GraphError(SdparseError, ValueError):
    """A computation graph or dependency graph was used outside its contract."""


class ConfigError(SdparseError, ValueError):
    """A configuration value is outside its documented range."""


class FormatError(SdparseError, ValueError):
    """A corpus, embedding, or checkpoint file violates its format.

    ``line`` carries the 1-based line number when one is known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(SdparseError, ValueError):
    """Predicted and gold corpora do not line up sentence by sentence."""
