class DeepnetError(Exception):
    """Base class for this package's errors."""


class ValidationError(DeepnetError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class NumericalError(DeepnetError):
    """Training diverged or produced non-finite values (CLI exit code 3)."""


class CodecError(DeepnetError):
    """Malformed or unreadable on-disk data (CLI exit code 4)."""
