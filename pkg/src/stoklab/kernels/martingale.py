"""Path scanners used by the martingale audits."""

from __future__ import annotations

import numpy as np

from .. import _backend
from .._backend import njit


@njit
def _upcrossings_nb(values, a, b):
    n_paths, n_times = values.shape
    out = np.zeros(n_paths, dtype=np.int64)
    for p in range(n_paths):
        seeking_low = True
        count = 0
        for k in range(n_times):
            v = values[p, k]
            if seeking_low:
                if v <= a:
                    seeking_low = False
            elif v >= b:
                count += 1
                seeking_low = True
        out[p] = count
    return out


def _upcrossings_numpy(values, a, b):
    n_paths, n_times = values.shape
    seeking_low = np.ones(n_paths, dtype=bool)
    count = np.zeros(n_paths, dtype=np.int64)
    for k in range(n_times):
        v = values[:, k]
        up = ~seeking_low & (v >= b)
        count += up
        seeking_low = np.where(seeking_low, v > a, up)
    return count


def upcrossings_rows(values: np.ndarray, a: float, b: float) -> np.ndarray:
    """Completed a->b upcrossings of each row of ``values`` (paths along axis 0)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if _backend.use_numba():
        return _upcrossings_nb(values, float(a), float(b))
    return _upcrossings_numpy(values, float(a), float(b))
