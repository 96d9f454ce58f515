"""Exception types shared across the package."""

from __future__ import annotations


class StoklabError(Exception):
    pass


class InvalidArgument(StoklabError, ValueError):
    """A precondition on the arguments does not hold."""


class ResourceLimitError(StoklabError, RuntimeError):
    """A size limit (population cap, tree depth, DP horizon) would be exceeded."""


class NumericError(StoklabError, ArithmeticError):
    """A numerical procedure failed (singular system, non-convergence)."""


class ExplosionError(NumericError):
    """A simulated state became non-finite or exceeded the explosion bound."""

    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"path exploded at t={self.time:g}")


class PecletError(InvalidArgument):
    """Central differences would lose monotonicity; ``required_n`` fixes it."""

    def __init__(self, required_n: int | None, message: str):
        self.required_n = required_n
        super().__init__(message)
