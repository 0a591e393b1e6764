"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: validation errors -> 2,
numerical failures -> 3, I/O and codec errors -> 4.
"""


class Cel0locError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(Cel0locError, ValueError):
    """Invalid parameters, mismatched grids, or malformed configuration."""


class NumericalError(Cel0locError, RuntimeError):
    """A numerical procedure failed (NaN iterates, nonconvergent power iteration)."""


class CodecError(Cel0locError, IOError):
    """Malformed or inconsistent on-disk data."""
