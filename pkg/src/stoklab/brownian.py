"""Brownian motion: increment and dyadic constructions, maxima, exact passage times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import InvalidArgument, ResourceLimitError
from .kernels import bm as bm_kern
from .kernels import rng
from .simcore import Path, RandomStream

MAX_DYADIC_DEPTH = 24

# Overshoot constant for discretely monitored Brownian maxima: the grid maximum
# behaves like the continuous one with the level raised by BETA * sqrt(dt).
# BETA = -zeta(1/2) / sqrt(2 pi).
MONITORING_BETA = 0.5825971579390106


def check_grid(grid) -> np.ndarray:
    t = np.asarray(grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 1:
        raise InvalidArgument("grid must be a non-empty 1-D sequence")
    if t[0] != 0.0:
        raise InvalidArgument("grid must start at 0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise InvalidArgument("grid must be strictly increasing")
    return t


def uniform_grid(T: float, n_steps: int) -> np.ndarray:
    return np.linspace(0.0, T, n_steps + 1)


def sample_bm_increments(stream: RandomStream, grid) -> Path:
    """B on ``grid`` from independent N(0, dt) increments, B_0 = 0."""
    t = check_grid(grid)
    inc = np.sqrt(np.diff(t)) * stream.gaussians(t.size - 1)
    values = np.zeros(t.size)
    np.cumsum(inc, out=values[1:])
    return Path(t, values)


def bm_batch(stream: RandomStream, grid, n_paths: int) -> Path:
    """``n_paths`` independent Brownian paths on a shared grid; values have shape (T, n_paths).

    Column p equals ``sample_bm_increments(stream.substream(p), grid)``.
    """
    t = check_grid(grid)
    z = rng.gaussian_grid(stream.master_seed, stream.stream_id, n_paths, 0, t.size - 1)
    values = np.zeros((t.size, n_paths))
    np.cumsum(z.T * np.sqrt(np.diff(t))[:, None], axis=0, out=values[1:])
    return Path(t, values)


# -- dyadic construction ------------------------------------------------------------


@dataclass(frozen=True)
class DyadicBridgeTree:
    """Brownian values at k 2^-depth, k = 0..2^depth, built by midpoint refinement.

    Randomness is addressed by node: the endpoint B_1 uses counter ``base``,
    and midpoint k of level l >= 1 uses counter ``base + 2^(l-1) + k``, so
    refining never disturbs existing nodes.
    """

    depth: int
    values: np.ndarray
    master_seed: int
    stream_id: int
    base: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / float(2**self.depth)

    def as_path(self) -> Path:
        return Path(self.times, self.values)

    def refine(self) -> "DyadicBridgeTree":
        """Insert the midpoints of the next level: X_mid = X_s + (U - V)/2, U = X_t - X_s, V ~ N(0, t - s)."""
        if self.depth >= MAX_DYADIC_DEPTH:
            raise ResourceLimitError(f"dyadic depth limited to {MAX_DYADIC_DEPTH}")
        n = 2**self.depth
        z = rng.gaussian_grid(self.master_seed, self.stream_id, 1, self.base + n, n)[0]
        v = math.sqrt(1.0 / n) * z
        left, right = self.values[:-1], self.values[1:]
        mid = left + ((right - left) - v) / 2.0
        out = np.empty(2 * n + 1)
        out[0::2] = self.values
        out[1::2] = mid
        return DyadicBridgeTree(self.depth + 1, out, self.master_seed, self.stream_id, self.base)

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def sample_bm_dyadic(stream: RandomStream, depth: int) -> DyadicBridgeTree:
    """Dyadic Brownian tree on [0, 1]; consumes 2^depth draws from ``stream``."""
    if depth < 0:
        raise InvalidArgument("depth must be nonnegative")
    if depth > MAX_DYADIC_DEPTH:
        raise ResourceLimitError(f"dyadic depth limited to {MAX_DYADIC_DEPTH}")
    base = stream.counter
    endpoint = float(rng.gaussian_grid(stream.master_seed, stream.stream_id, 1, base, 1)[0, 0])
    tree = DyadicBridgeTree(0, np.array([0.0, endpoint]), stream.master_seed, stream.stream_id, base)
    for _ in range(depth):
        tree = tree.refine()
    stream.counter = base + 2**depth
    return tree


# -- maxima and reflection --------------------------------------------------------------


def max_law_cdf(L: float, t: float) -> float:
    """P[sup_{s<=t} B_s >= L] = 2 P[B_t >= L] = erfc(L / sqrt(2t))."""
    if not L >= 0:
        raise InvalidArgument("L must be nonnegative")
    if not t > 0:
        raise InvalidArgument("t must be positive")
    return float(erfc(L / math.sqrt(2.0 * t)))


def monitoring_bias_allowance(L: float, t: float, dt: float) -> float:
    """Allowance for the grid-maximum bias of P[max >= L] at time step ``dt``.

    Twice the shift in the closed form when the level is raised by
    ``MONITORING_BETA * sqrt(dt)``; the factor two covers the neglected
    higher-order terms.
    """
    shifted = max_law_cdf(L + MONITORING_BETA * math.sqrt(dt), t)
    return 2.0 * abs(max_law_cdf(L, t) - shifted)


def running_maximum(stream: RandomStream, T: float, dt: float, n_paths: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid maxima and final values of ``n_paths`` Brownian paths on [0, T] with step ``dt``."""
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * T:
        raise InvalidArgument("T must be a positive multiple of dt")
    return bm_kern.running_max(stream.master_seed, stream.stream_id, n_paths, n_steps, dt)


def reflect_at_level(path: Path, L: float) -> Path:
    """Mirror the path in L strictly after its first grid crossing of L.

    Works column-wise when ``values`` is (T, n_paths).
    """
    v = np.asarray(path.values, dtype=np.float64)
    flat = v.reshape(v.shape[0], -1)
    out = flat.copy()
    for j in range(flat.shape[1]):
        col = flat[:, j]
        side = np.sign(col[0] - L)
        if side == 0:
            k = 0
        else:
            crossed = np.flatnonzero(np.sign(col - L) != side)
            if crossed.size == 0:
                continue
            k = int(crossed[0])
        out[k + 1 :, j] = 2.0 * L - col[k + 1 :]
    return Path(path.times, out.reshape(v.shape))


# -- exact first passage --------------------------------------------------------------------


def sample_first_passage(stream: RandomStream, a: float) -> float:
    """tau_a = inf{t : B_t = a}, sampled exactly as a^2 / Z^2."""
    if not a > 0:
        raise InvalidArgument("level must be positive")
    z = stream.gaussian()
    return a * a / (z * z)


def first_passage_samples(stream: RandomStream, a: float, n: int) -> np.ndarray:
    """``n`` consecutive :func:`sample_first_passage` draws."""
    if not a > 0:
        raise InvalidArgument("level must be positive")
    z = stream.gaussians(n)
    return a * a / (z * z)


def first_passage_cdf(t, a: float):
    """P[tau_a <= t] = P[sup_{s<=t} B_s >= a]."""
    t = np.asarray(t, dtype=np.float64)
    return erfc(a / np.sqrt(2.0 * np.maximum(t, 1e-300)))


def sample_line_hit_2d(stream: RandomStream) -> float:
    """Abscissa where planar BM from (0, 1) first hits the x-axis: sqrt(tau) Z'."""
    tau = sample_first_passage(stream, 1.0)
    return math.sqrt(tau) * stream.gaussian()


def line_hit_samples(stream: RandomStream, n: int) -> np.ndarray:
    """``n`` consecutive :func:`sample_line_hit_2d` draws."""
    g = stream.gaussians(2 * n)
    tau = 1.0 / (g[0::2] * g[0::2])
    return np.sqrt(tau) * g[1::2]


def cauchy_cdf(x):
    return 0.5 + np.arctan(np.asarray(x, dtype=np.float64)) / np.pi
