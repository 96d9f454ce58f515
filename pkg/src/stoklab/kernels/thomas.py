"""Tridiagonal solves by the Thomas algorithm.

The numpy backend runs the same recurrence in plain Python so that both
backends return bit-identical solutions.
"""

from __future__ import annotations

import numpy as np

from .. import _backend
from .._backend import njit
from ..errors import NumericError


@njit
def _thomas_nb(lower, diag, upper, rhs):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    denom = diag[0]
    if denom == 0.0:
        return d, False
    c[0] = upper[0] / denom
    d[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        if denom == 0.0:
            return d, False
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        d[i] -= c[i] * d[i + 1]
    return d, True


def solve_tridiagonal(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the system with sub-diagonal ``lower[1:]``, ``diag``, super-diagonal ``upper[:-1]``."""
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    kernel = _thomas_nb if _backend.use_numba() else _backend.python_function(_thomas_nb)
    x, ok = kernel(lower, diag, upper, rhs)
    if not ok:
        raise NumericError("singular tridiagonal system")
    if not np.all(np.isfinite(x)):
        raise NumericError("tridiagonal solve produced non-finite values")
    return x
