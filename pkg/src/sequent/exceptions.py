"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid shapes, ranges or configuration values."""


class TrainingError(RuntimeError):
    """Numerical divergence during training (non-finite loss or gradient)."""
