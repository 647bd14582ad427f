"""Exception types shared across the package.

Every error carries a short machine-readable code (stable, SCREAMING_SNAKE)
and maps to a fixed CLI exit status: configuration 1, data 2, training 3.
"""


class LabelsiftError(Exception):
    exit_status = 1

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ConfigurationError(LabelsiftError):
    """Bad arguments, flags, or parameter values."""

    exit_status = 1


class DataError(LabelsiftError):
    """Unreadable, malformed, or internally inconsistent input data."""

    exit_status = 2


class TrainingError(LabelsiftError):
    """Training failed (for example the loss diverged to a non-finite value)."""

    exit_status = 3
