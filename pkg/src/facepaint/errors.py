"""Exception types shared across the package."""


class FacepaintError(Exception):
    """Base class for errors raised by this package."""


class DataError(FacepaintError):
    """Bad input data: missing/corrupt files, shape or range violations."""


class NumericsError(FacepaintError):
    """Non-finite values encountered where finite numbers are required."""
