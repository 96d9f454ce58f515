"""Kernel backend selection.

Hot loops ship in two flavours: a numba ``@njit`` kernel and a pure-numpy
fallback.  The active flavour is read from the ``STOKLAB_BACKEND`` environment
variable (``numba`` or ``numpy``) at import time and can be switched at runtime
with :func:`use` (mostly useful in tests and benchmarks).
"""

from __future__ import annotations

import contextlib
import os
from typing import Callable, Iterator

try:
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # TBB only when nothing else is available (old TBB builds warn on import)
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get("STOKLAB_BACKEND", "numba").strip().lower()
    if requested not in _VALID:
        raise ValueError(f"STOKLAB_BACKEND must be one of {_VALID}, got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


_active = _initial_backend()


def active() -> str:
    """Name of the backend currently used by dispatching kernels."""
    return _active


def use_numba() -> bool:
    return _active == "numba"


def set_backend(name: str) -> None:
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _active = name


@contextlib.contextmanager
def use(name: str) -> Iterator[None]:
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Kernels decorated with this are only *called* under the numba backend;
    the numpy backend has its own vectorised implementation.
    """
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def coefficient(fn: Callable) -> Callable:
    """Mark an SDE coefficient ``fn(x, t)`` as jit-compilable.

    With numba installed the function is compiled so that exit-time and path
    kernels can call it from nopython code.  The numpy code paths call
    :func:`python_function` instead, so the body must use elementwise numpy
    operations only.
    """
    if HAVE_NUMBA and not is_jitted(fn):
        return numba.njit(fn)
    return fn


def python_function(fn: Callable) -> Callable:
    """The plain Python callable behind a (possibly jitted) coefficient."""
    return getattr(fn, "py_func", fn)


def is_jitted(fn: object) -> bool:
    if not HAVE_NUMBA:
        return False
    from numba.core.registry import CPUDispatcher

    return isinstance(fn, CPUDispatcher)


def set_threads(n: int) -> int:
    """Set numba worker threads (clamped to the launch limit); returns the value used."""
    if not HAVE_NUMBA:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n
