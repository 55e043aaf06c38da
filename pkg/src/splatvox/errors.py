"""Exception types shared across the package."""


class SplatVoxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SplatVoxError, ValueError):
    """Raised when an argument violates a documented precondition."""
