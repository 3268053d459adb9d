"""Exception hierarchy shared across the package."""


class RetargetError(Exception):
    """Base class for all package errors."""


class ValidationError(RetargetError):
    """Invalid data passed to a constructor or operation."""


class ConfigError(RetargetError):
    """Invalid or inconsistent run configuration."""


class DegenerateRotationError(ValidationError):
    """6D rotation input cannot be orthonormalized (zero or parallel vectors)."""


class ShapeError(ValidationError):
    """Array shape mismatch; message carries both shapes."""


class BVHParseError(RetargetError):
    """BVH input rejected; message carries a line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CheckpointError(RetargetError):
    """Checkpoint file missing, corrupt, or from an unknown version."""


class NumericalError(RetargetError):
    """Non-finite value detected during training."""
