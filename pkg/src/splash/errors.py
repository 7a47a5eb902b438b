"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


class UsageError(ValueError):
    """Raised when an API is called with arguments that violate its contract."""


class TrainingError(RuntimeError):
    """Raised when optimization encounters non-finite values or similar faults."""
