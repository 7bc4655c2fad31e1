"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter combination that can never be valid (bad key, B <= C, ...)."""


class IngestionError(RuntimeError):
    """Raised when a dataset file is missing, truncated, or malformed."""


class SingularEstimateError(ArithmeticError):
    """A channel estimate came out exactly zero, so the projector is undefined."""
