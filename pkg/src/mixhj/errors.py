"""Exception types shared by all modules."""

from __future__ import annotations


class MixHJError(Exception):
    """Base class for package errors."""


class InvalidArgument(MixHJError, ValueError):
    """Inputs violate an operation's preconditions."""


class WindowTooSmall(MixHJError):
    """A supremum or admissible path was not found inside the search window."""


class CFLViolation(MixHJError):
    """A time step would break the monotonicity condition of the scheme."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class InternalError(MixHJError):
    """An internal consistency check failed (e.g. a bisection lost its bracket)."""


class ResourceLimit(MixHJError):
    """A requested computation exceeds the configured budget."""
