class ModelError(ValueError):
    """A game model, strategy or belief violates its structural invariants."""


class DimensionMismatch(ModelError):
    pass


class StrategyError(ModelError):
    pass


class MissingLevel(StrategyError, LookupError):
    pass


class ModelFormatError(ModelError):
    """Raised by the text loaders; ``line`` is 1-based, or None for EOF errors."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
