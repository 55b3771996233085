"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class DataError(ValueError):
    """Malformed or inconsistent data file (dataset, model)."""


class NoSignalError(RuntimeError):
    """Receiver got an all-zero capture; no correlation peak exists."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""
