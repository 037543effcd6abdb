"""Exception types shared across the toolkit."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class InvalidInput(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class HypothesisError(ValueError):
    """A hypothesis of the second excess theorem fails.

    ``condition`` is one of ``"i"``, ``"ii"``, ``"iii"``.
    """

    def __init__(self, condition: str, message: str):
        super().__init__(f"hypothesis ({condition}) fails: {message}")
        self.condition = condition


class InvalidPoint(ValueError):
    pass


class InvalidConfig(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class BoundaryEmpty(ValueError):
    pass


class DegenerateBall(ValueError):
    pass


class ResourceError(MemoryError):
    pass


class GridMismatch(ValueError):
    pass


class ConfigError(ValueError):
    """Malformed campaign or replay configuration.

    ``field`` carries the dotted path of the offending entry when known.
    """

    def __init__(self, field: str, message: str = ""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field
