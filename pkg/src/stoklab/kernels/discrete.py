"""Batch simulators for the discrete-time models.

Every routine takes ``(seed, stream0, n_paths, ...)``; path ``p`` consumes
stream ``stream0 + p`` from counter 0 (plus ``start`` where offered), so the
two backends give identical integer results.
"""

from __future__ import annotations

import numpy as np

from .. import _backend
from .._backend import njit
from . import rng
from .rng import MASK64, uniform_at_nb, uniform_pair_nb


# -- finite chain -------------------------------------------------------------


@njit
def _chain_paths_nb(cum, x0, seed_lo, seed_hi, stream0, n_paths, start, n_steps):
    out = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    n_states = cum.shape[1]
    for p in range(n_paths):
        stream = stream0 + np.uint64(p)
        x = x0
        out[p, 0] = x
        for k in range(n_steps):
            u = uniform_at_nb(seed_lo, seed_hi, stream, np.uint64(start + k))
            row = cum[x]
            j = 0
            while j < n_states - 1 and row[j] <= u:
                j += 1
            x = j
            out[p, k + 1] = x
    return out


def _chain_paths_numpy(cum, x0, seed, stream0, n_paths, start, n_steps):
    out = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    out[:, 0] = x0
    x = np.full(n_paths, x0, dtype=np.int64)
    chunk = 256
    for k0 in range(0, n_steps, chunk):
        m = min(chunk, n_steps - k0)
        u = rng.uniform_grid(seed, stream0, n_paths, start + k0, m)
        for k in range(m):
            rows = cum[x]
            x = np.minimum((rows <= u[:, k, None]).sum(axis=1), cum.shape[1] - 1)
            out[:, k0 + k + 1] = x
    return out


def chain_paths(cum: np.ndarray, x0: int, seed: int, stream0: int, n_paths: int, n_steps: int, start: int = 0):
    """Trajectories of a finite chain given row-wise cumulative transition probabilities."""
    cum = np.ascontiguousarray(cum, dtype=np.float64)
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _chain_paths_nb(cum, int(x0), lo, hi, np.uint64(stream0 & MASK64), n_paths, start, n_steps)
    return _chain_paths_numpy(cum, int(x0), seed, stream0, n_paths, start, n_steps)


# -- simple random walk ---------------------------------------------------------


@njit
def _walk_paths_nb(seed_lo, seed_hi, stream0, n_paths, n_steps, dim):
    out = np.zeros((n_paths, n_steps + 1, dim), dtype=np.int64)
    for p in range(n_paths):
        stream = stream0 + np.uint64(p)
        k = 0
        while k < n_steps:
            a, b = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64(k >> 1))
            for u in (a, b):
                if k >= n_steps:
                    break
                idx = int(u * 2 * dim)
                for d in range(dim):
                    out[p, k + 1, d] = out[p, k, d]
                if idx & 1:
                    out[p, k + 1, idx >> 1] += 1
                else:
                    out[p, k + 1, idx >> 1] -= 1
                k += 1
    return out


def _walk_paths_numpy(seed, stream0, n_paths, n_steps, dim):
    out = np.zeros((n_paths, n_steps + 1, dim), dtype=np.int64)
    if n_steps == 0:
        return out
    u = rng.uniform_grid(seed, stream0, n_paths, 0, n_steps)
    idx = (u * (2 * dim)).astype(np.int64)
    steps = np.zeros((n_paths, n_steps, dim), dtype=np.int64)
    sign = np.where(idx & 1, 1, -1)
    np.put_along_axis(steps, (idx >> 1)[..., None], sign[..., None], axis=2)
    np.cumsum(steps, axis=1, out=out[:, 1:, :])
    return out


def walk_paths(seed: int, stream0: int, n_paths: int, n_steps: int, dim: int = 1) -> np.ndarray:
    """Symmetric nearest-neighbour walks on Z^dim from the origin, shape (n_paths, n_steps+1, dim)."""
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _walk_paths_nb(lo, hi, np.uint64(stream0 & MASK64), n_paths, n_steps, dim)
    return _walk_paths_numpy(seed, stream0, n_paths, n_steps, dim)


# -- Polya urn ---------------------------------------------------------------


@njit
def _polya_reds_nb(r0, v0, c, seed_lo, seed_hi, stream0, n_paths, n_steps):
    reds = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    for p in range(n_paths):
        stream = stream0 + np.uint64(p)
        r = r0
        total = r0 + v0
        reds[p, 0] = r
        for k in range(n_steps):
            u = uniform_at_nb(seed_lo, seed_hi, stream, np.uint64(k))
            if u * total < r:
                r += c
            total += c
            reds[p, k + 1] = r
    return reds


def _polya_reds_numpy(r0, v0, c, seed, stream0, n_paths, n_steps):
    reds = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    reds[:, 0] = r0
    if n_steps == 0:
        return reds
    u = rng.uniform_grid(seed, stream0, n_paths, 0, n_steps)
    r = np.full(n_paths, r0, dtype=np.int64)
    total = r0 + v0
    for k in range(n_steps):
        r = r + c * (u[:, k] * total < r)
        total += c
        reds[:, k + 1] = r
    return reds


def polya_reds(r0: int, v0: int, c: int, seed: int, stream0: int, n_paths: int, n_steps: int) -> np.ndarray:
    """Red-ball counts r_n of independent urns, shape (n_paths, n_steps+1).

    A red ball is drawn at step k when ``u * N_k < r_k``, i.e. with probability
    r_k / N_k exactly (the comparison avoids forming the ratio).
    """
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _polya_reds_nb(r0, v0, c, lo, hi, np.uint64(stream0 & MASK64), n_paths, n_steps)
    return _polya_reds_numpy(r0, v0, c, seed, stream0, n_paths, n_steps)


# -- Galton-Watson --------------------------------------------------------------


@njit
def _gw_generations_nb(cdf, z0, seed_lo, seed_hi, stream0, n_trees, n_gen, stop_at):
    # sizes[p, g] = -1 once tree p reached stop_at and was no longer simulated
    sizes = np.full((n_trees, n_gen + 1), -1, dtype=np.int64)
    kmax = cdf.size - 1
    for p in range(n_trees):
        stream = stream0 + np.uint64(p)
        ctr = 0
        z = z0
        sizes[p, 0] = z
        for g in range(n_gen):
            if z >= stop_at:
                break
            nxt = 0
            for _ in range(z):
                u = uniform_at_nb(seed_lo, seed_hi, stream, np.uint64(ctr))
                ctr += 1
                k = 0
                while k < kmax and cdf[k] <= u:
                    k += 1
                nxt += k
            z = nxt
            sizes[p, g + 1] = z
    return sizes


def _gw_generations_numpy(cdf, z0, seed, stream0, n_trees, n_gen, stop_at):
    sizes = np.full((n_trees, n_gen + 1), -1, dtype=np.int64)
    z = np.full(n_trees, z0, dtype=np.int64)
    ctr = np.zeros(n_trees, dtype=np.int64)
    sizes[:, 0] = z
    live = np.ones(n_trees, dtype=bool)
    kmax = cdf.size - 1
    for g in range(n_gen):
        live &= z < stop_at
        trees = np.flatnonzero(live)
        if trees.size == 0:
            break
        counts = z[trees]
        total = int(counts.sum())
        nxt = np.zeros(trees.size, dtype=np.int64)
        if total:
            owner = np.repeat(np.arange(trees.size), counts)
            first = np.cumsum(counts) - counts
            within = np.arange(total) - first[owner]
            counter = ctr[trees][owner] + within
            u = rng.uniforms_at(seed, np.uint64(stream0 & MASK64) + trees[owner].astype(np.uint64), counter)
            k = np.minimum(np.searchsorted(cdf, u, side="right"), kmax)
            nxt = np.bincount(owner, weights=k, minlength=trees.size).astype(np.int64)
        ctr[trees] += counts
        z[trees] = nxt
        sizes[trees, g + 1] = nxt
    return sizes


def gw_generations(cdf, z0, seed, stream0, n_trees, n_gen, stop_at):
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _gw_generations_nb(cdf, int(z0), lo, hi, np.uint64(stream0 & MASK64), n_trees, n_gen, int(stop_at))
    return _gw_generations_numpy(cdf, int(z0), seed, stream0, n_trees, n_gen, int(stop_at))
