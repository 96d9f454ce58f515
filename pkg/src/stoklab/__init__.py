"""Simulation and numerical checks for martingales, Brownian motion, Ito calculus and diffusions."""

from ._backend import active as active_backend
from ._backend import set_backend, set_threads
from .errors import ExplosionError, InvalidArgument, NumericError, PecletError, ResourceLimitError, StoklabError
from .simcore import McEstimate, Path, RandomStream, derive_stream

__version__ = "0.1.0"

__all__ = [
    "active_backend", "set_backend", "set_threads",
    "ExplosionError", "InvalidArgument", "NumericError", "PecletError", "ResourceLimitError", "StoklabError",
    "McEstimate", "Path", "RandomStream", "derive_stream",
]
