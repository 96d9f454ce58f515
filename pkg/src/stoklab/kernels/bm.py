"""Fused Brownian kernels: running maxima without materialising paths."""

from __future__ import annotations

import numpy as np

from .. import _backend
from .._backend import njit, prange
from . import rng
from .rng import MASK64, ppf_nb, uniform_pair_nb


@njit(parallel=True)
def _running_max_nb(seed_lo, seed_hi, stream0, n_paths, n_steps, sqdt):
    maxima = np.empty(n_paths)
    finals = np.empty(n_paths)
    for p in prange(n_paths):
        stream = stream0 + np.uint64(p)
        x = 0.0
        m = 0.0
        for block in range((n_steps + 1) // 2):
            a, b = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64(block))
            x += sqdt * ppf_nb(a)
            if x > m:
                m = x
            if 2 * block + 1 < n_steps:
                x += sqdt * ppf_nb(b)
                if x > m:
                    m = x
        maxima[p] = m
        finals[p] = x
    return maxima, finals


def _running_max_numpy(seed, stream0, n_paths, n_steps, sqdt, path_chunk=4096, step_chunk=512):
    maxima = np.empty(n_paths)
    finals = np.empty(n_paths)
    for p0 in range(0, n_paths, path_chunk):
        n = min(path_chunk, n_paths - p0)
        x = np.zeros(n)
        m = np.zeros(n)
        for k0 in range(0, n_steps, step_chunk):
            k = min(step_chunk, n_steps - k0)
            inc = sqdt * rng.gaussian_grid(seed, stream0 + p0, n, k0, k)
            # sequential accumulation, same rounding as the fused kernel
            partial = np.cumsum(np.concatenate([x[:, None], inc], axis=1), axis=1)[:, 1:]
            np.maximum(m, partial.max(axis=1), out=m)
            x = partial[:, -1]
        maxima[p0 : p0 + n] = m
        finals[p0 : p0 + n] = x
    return maxima, finals


def running_max(seed: int, stream0: int, n_paths: int, n_steps: int, dt: float):
    """(max_k B_{k dt}, B_{n dt}) per path, B_0 = 0; path p uses stream ``stream0 + p``."""
    sqdt = float(np.sqrt(dt))
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _running_max_nb(lo, hi, np.uint64(stream0 & MASK64), n_paths, n_steps, sqdt)
    return _running_max_numpy(seed, stream0, n_paths, n_steps, sqdt)
