"""Exception types shared across the package."""


class CCAError(Exception):
    """Base class for all library errors."""


class DimensionError(CCAError, ValueError):
    """Raised when raster dimensions do not agree."""


class ParameterError(CCAError, ValueError):
    """Raised for out-of-range numeric parameters."""


class LevelCountError(CCAError, ValueError):
    """Raised when a pyramid cannot hold the requested number of levels."""


class ConfigError(CCAError, ValueError):
    """Raised for unknown keys, bad values or violated config invariants."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InvariantViolation(CCAError, RuntimeError):
    """An internal invariant that should be impossible to break was broken."""
