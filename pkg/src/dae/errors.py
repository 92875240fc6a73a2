"""Exception hierarchy shared by every module."""


class DAEError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DAEError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class StateError(DAEError, RuntimeError):
    """A layer or model was used out of order (e.g. backward before forward)."""


class FormatError(DAEError, ValueError):
    """A file does not carry the expected magic number or version."""


class CorruptionError(DAEError, ValueError):
    """A file has the right header but an inconsistent or truncated body."""


class ArchMismatchError(DAEError, ValueError):
    """A checkpoint was loaded as the wrong architecture."""


class UnsupportedShapeError(DAEError, ValueError):
    """Image dimensions other than the supported 28x28."""


class NumericalError(DAEError, ArithmeticError):
    """Training produced a non-finite loss."""
