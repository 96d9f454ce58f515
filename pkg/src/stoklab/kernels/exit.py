"""Exit-time simulation kernels (1-D diffusions, isotropic n-D Brownian motion).

Path p draws its Gaussians sequentially from stream ``stream0 + p``.  The
numpy fallbacks keep an active set of unfinished paths and address the same
draws by (stream, counter), so both backends see identical noise.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _backend
from .._backend import njit, prange
from . import rng
from .rng import MASK64, ppf_nb, uniform_pair_nb

EXIT_A, EXIT_B, NOT_EXITED = 0, 1, 2


# -- 1-D diffusion ----------------------------------------------------------------


@njit(parallel=True)
def _exit_1d_nb(f, g, x0, a, b, dt, max_steps, seed_lo, seed_hi, stream0, n_paths):
    tau = np.empty(n_paths)
    code = np.empty(n_paths, dtype=np.int8)
    sqdt = math.sqrt(dt)
    for p in prange(n_paths):
        stream = stream0 + np.uint64(p)
        x = x0
        k = 0
        c = NOT_EXITED
        spare = 0.0
        while k < max_steps:
            if k & 1 == 0:
                u, spare = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64(k >> 1))
            else:
                u = spare
            z = ppf_nb(u)
            t = k * dt
            x = x + f(x, t) * dt + g(x, t) * (sqdt * z)
            k += 1
            if x <= a:
                c = EXIT_A
                break
            if x >= b:
                c = EXIT_B
                break
        tau[p] = k * dt
        code[p] = c
    return tau, code


def _exit_1d_numpy(f, g, x0, a, b, dt, max_steps, seed, stream0, n_paths):
    tau = np.empty(n_paths)
    code = np.full(n_paths, NOT_EXITED, dtype=np.int8)
    sqdt = math.sqrt(dt)
    idx = np.arange(n_paths)
    x = np.full(n_paths, float(x0))
    streams = np.uint64(stream0 & MASK64) + idx.astype(np.uint64)
    k = 0
    while idx.size and k < max_steps:
        z = rng.gaussians_at(seed, streams, np.full(idx.size, k, dtype=np.uint64))
        t = k * dt
        x = x + f(x, t) * dt + g(x, t) * (sqdt * z)
        k += 1
        done_a = x <= a
        done_b = ~done_a & (x >= b)
        done = done_a | done_b
        if done.any():
            tau[idx[done]] = k * dt
            code[idx[done_a]] = EXIT_A
            code[idx[done_b]] = EXIT_B
            keep = ~done
            idx, x, streams = idx[keep], x[keep], streams[keep]
    tau[idx] = k * dt
    return tau, code


def exit_1d(f, g, x0, a, b, dt, max_steps, seed, stream0, n_paths):
    """Euler paths of dX = f dt + g dB from x0 until X <= a or X >= b.

    Returns (tau, code) with tau = steps * dt and code in {EXIT_A, EXIT_B,
    NOT_EXITED}.  ``f`` and ``g`` are coefficients made with
    :func:`stoklab._backend.coefficient`.
    """
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        f_nb, g_nb = _backend.coefficient(f), _backend.coefficient(g)
        return _exit_1d_nb(f_nb, g_nb, float(x0), float(a), float(b), float(dt), int(max_steps), lo, hi,
                           np.uint64(stream0 & MASK64), int(n_paths))
    f_py, g_py = _backend.python_function(f), _backend.python_function(g)
    return _exit_1d_numpy(f_py, g_py, x0, a, b, dt, max_steps, seed, stream0, n_paths)


# -- isotropic Brownian motion in R^n ----------------------------------------------------


@njit
def _ball_step(dist, kappa, dt_min, dt_max):
    h = (kappa * dist) ** 2
    if h < dt_min:
        return dt_min
    if h > dt_max:
        return dt_max
    return h


@njit(parallel=True)
def _ball_nb(x0, inner, outer, annulus, dt_min, dt_max, kappa, max_steps, seed_lo, seed_hi, stream0, n_paths):
    dim = x0.size
    tau = np.empty(n_paths)
    code = np.empty(n_paths, dtype=np.int8)
    for p in prange(n_paths):
        stream = stream0 + np.uint64(p)
        x = x0.copy()
        t = 0.0
        ctr = 0
        spare = 0.0
        c = NOT_EXITED
        r = math.sqrt(np.sum(x * x))
        for _ in range(max_steps):
            if annulus:
                dist = min(r - inner, outer - r)
            else:
                dist = outer - r
            h = _ball_step(dist, kappa, dt_min, dt_max)
            sq = math.sqrt(h)
            for d in range(dim):
                if ctr & 1 == 0:
                    u, spare = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64(ctr >> 1))
                else:
                    u = spare
                ctr += 1
                x[d] += sq * ppf_nb(u)
            t += h
            r = math.sqrt(np.sum(x * x))
            if annulus and r <= inner:
                c = EXIT_A
                break
            if r >= outer:
                c = EXIT_B
                break
        tau[p] = t
        code[p] = c
    return tau, code


def _ball_numpy(x0, inner, outer, annulus, dt_min, dt_max, kappa, max_steps, seed, stream0, n_paths):
    dim = x0.size
    tau = np.zeros(n_paths)
    code = np.full(n_paths, NOT_EXITED, dtype=np.int8)
    idx = np.arange(n_paths)
    x = np.tile(x0, (n_paths, 1))
    t = np.zeros(n_paths)
    streams = np.uint64(stream0 & MASK64) + idx.astype(np.uint64)
    ctr = 0
    r = np.sqrt(np.sum(x * x, axis=1))
    for _ in range(max_steps):
        if idx.size == 0:
            break
        dist = np.minimum(r - inner, outer - r) if annulus else outer - r
        h = np.clip((kappa * dist) ** 2, dt_min, dt_max)
        sq = np.sqrt(h)
        for d in range(dim):
            z = rng.gaussians_at(seed, streams, np.full(idx.size, ctr, dtype=np.uint64))
            ctr += 1
            x[:, d] += sq * z
        t += h
        # same summation order as the jitted kernel
        acc = np.zeros(idx.size)
        for d in range(dim):
            acc = acc + x[:, d] * x[:, d]
        r = np.sqrt(acc)
        hit_in = (r <= inner) if annulus else np.zeros(idx.size, dtype=bool)
        hit_out = ~hit_in & (r >= outer)
        done = hit_in | hit_out
        if done.any():
            tau[idx[done]] = t[done]
            code[idx[hit_in]] = EXIT_A
            code[idx[hit_out]] = EXIT_B
            keep = ~done
            idx, x, t, r, streams = idx[keep], x[keep], t[keep], r[keep], streams[keep]
    tau[idx] = t
    return tau, code


def ball_exit(x0, inner, outer, annulus, dt_min, dt_max, kappa, max_steps, seed, stream0, n_paths):
    """Brownian motion in R^n from x0 until |x| >= outer (or |x| <= inner in annulus mode).

    The step is (kappa * distance to the boundary)^2 clipped to
    [dt_min, dt_max], so paths far from the boundary take large steps.
    Returns (tau, code) with EXIT_A for the inner sphere, EXIT_B for the outer.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    args = (float(inner), float(outer), bool(annulus), float(dt_min), float(dt_max), float(kappa), int(max_steps))
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _ball_nb(x0, *args, lo, hi, np.uint64(stream0 & MASK64), int(n_paths))
    return _ball_numpy(x0, *args, seed, stream0, n_paths)


# -- occupation time ---------------------------------------------------------------


@njit(parallel=True)
def _positive_fraction_nb(seed_lo, seed_hi, stream0, n_paths, n_steps, sqdt):
    out = np.empty(n_paths)
    for p in prange(n_paths):
        stream = stream0 + np.uint64(p)
        x = 0.0
        count = 0
        for block in range((n_steps + 1) // 2):
            a, b = uniform_pair_nb(seed_lo, seed_hi, stream, np.uint64(block))
            x += sqdt * ppf_nb(a)
            if x > 0.0:
                count += 1
            if 2 * block + 1 < n_steps:
                x += sqdt * ppf_nb(b)
                if x > 0.0:
                    count += 1
        out[p] = count / n_steps
    return out


def _positive_fraction_numpy(seed, stream0, n_paths, n_steps, sqdt, path_chunk=4096, step_chunk=512):
    out = np.empty(n_paths)
    for p0 in range(0, n_paths, path_chunk):
        n = min(path_chunk, n_paths - p0)
        x = np.zeros(n)
        count = np.zeros(n, dtype=np.int64)
        for k0 in range(0, n_steps, step_chunk):
            k = min(step_chunk, n_steps - k0)
            inc = sqdt * rng.gaussian_grid(seed, stream0 + p0, n, k0, k)
            partial = np.cumsum(np.concatenate([x[:, None], inc], axis=1), axis=1)[:, 1:]
            count += (partial > 0.0).sum(axis=1)
            x = partial[:, -1]
        out[p0 : p0 + n] = count / n_steps
    return out


def positive_fraction(seed, stream0, n_paths, n_steps, dt):
    """Fraction of grid times k dt, k = 1..n_steps, at which B > 0."""
    sqdt = math.sqrt(dt)
    if _backend.use_numba():
        lo, hi = rng.seed_words(seed)
        return _positive_fraction_nb(lo, hi, np.uint64(stream0 & MASK64), n_paths, n_steps, sqdt)
    return _positive_fraction_numpy(seed, stream0, n_paths, n_steps, sqdt)
