"""Exception types shared across the package."""


class FogcodedError(Exception):
    """Base class for all package errors."""


class InvalidParams(FogcodedError, ValueError):
    """A system or experiment parameter violates its constraints."""


class OutOfRange(FogcodedError, ValueError):
    """An argument of a counting function is outside its domain."""


class TooLarge(FogcodedError, ValueError):
    """An exhaustive enumeration was requested for an infeasible size."""


class DeadlineViolation(FogcodedError, RuntimeError):
    """A fog access point still misses subfiles after its delivery deadline.

    This is an internal consistency assertion; a correct delivery run never
    raises it.
    """


class DecodeFailure(FogcodedError, RuntimeError):
    """A requested file could not be reassembled from cache plus log."""
