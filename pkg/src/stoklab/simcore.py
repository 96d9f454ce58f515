"""Deterministic randomness, trajectory containers and Monte Carlo estimators.

Stream allocation convention: a Monte Carlo routine that receives a
:class:`RandomStream` and simulates ``n`` independent trajectories gives
trajectory ``p`` the stream ``(master_seed, stream_id + p)`` starting at
counter 0.  Single-trajectory routines draw sequentially from the stream they
are given.  So ``batch[p]`` equals the single-trajectory result on
``derive_stream(seed, stream_id + p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .kernels import rng

DEFAULT_Z = 4.0
_BUFFER = 1024


@dataclass
class RandomStream:
    """Single-owner cursor into the counter-based sequence ``(master_seed, stream_id)``."""

    master_seed: int
    stream_id: int
    counter: int = 0
    _buf_start: int = field(default=-1, repr=False, compare=False)
    _buf_u: np.ndarray = field(default=None, repr=False, compare=False)
    _buf_z: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.master_seed = int(self.master_seed) & rng.MASK64
        self.stream_id = int(self.stream_id) & rng.MASK64
        self.counter = int(self.counter)

    def uniforms(self, n: int) -> np.ndarray:
        out = rng.uniform_grid(self.master_seed, self.stream_id, 1, self.counter, n)[0]
        self.counter += n
        return out

    def gaussians(self, n: int) -> np.ndarray:
        out = rng.gaussian_grid(self.master_seed, self.stream_id, 1, self.counter, n)[0]
        self.counter += n
        return out

    def _refill(self):
        self._buf_start = self.counter
        self._buf_u = rng.uniform_grid(self.master_seed, self.stream_id, 1, self.counter, _BUFFER)[0]
        self._buf_z = rng.ppf(self._buf_u)

    def _slot(self) -> int:
        i = self.counter - self._buf_start
        if self._buf_u is None or not 0 <= i < _BUFFER:
            self._refill()
            i = 0
        self.counter += 1
        return i

    def uniform(self) -> float:
        i = self._slot()
        return float(self._buf_u[i])

    def gaussian(self) -> float:
        i = self._slot()
        return float(self._buf_z[i])

    def substream(self, offset: int) -> "RandomStream":
        """Fresh stream ``(master_seed, stream_id + offset)`` at counter 0."""
        return RandomStream(self.master_seed, self.stream_id + offset)


def derive_stream(master_seed: int, stream_id: int) -> RandomStream:
    return RandomStream(master_seed, stream_id)


def sample_gaussian(stream: RandomStream) -> float:
    return stream.gaussian()


@dataclass(frozen=True)
class Path:
    """Sampled trajectory: strictly increasing ``times`` and aligned ``values``.

    ``values`` has time as its first axis.  Trailing axes hold either the
    coordinates of a d-dimensional point or a batch of independent scalar
    trajectories sharing the time grid.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values)
        if times.ndim != 1 or times.size < 1:
            raise InvalidArgument("times must be a non-empty 1-D sequence")
        if values.shape[:1] != times.shape:
            raise InvalidArgument(f"values length {values.shape[:1]} does not match times {times.shape}")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InvalidArgument("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.times.size

    @property
    def final(self):
        return self.values[-1]

    @classmethod
    def on_integers(cls, values) -> "Path":
        values = np.asarray(values)
        return cls(np.arange(values.shape[0], dtype=np.float64), values)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int
    z: float = DEFAULT_Z

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument("n must be positive")
        if not self.stderr >= 0:
            raise InvalidArgument("stderr must be nonnegative")

    @property
    def ci_half_width(self) -> float:
        return self.z * self.stderr

    def contains(self, value: float, extra: float = 0.0) -> bool:
        return abs(self.mean - value) <= self.ci_half_width + extra

    @classmethod
    def from_samples(cls, samples, z: float = DEFAULT_Z) -> "McEstimate":
        x = np.asarray(samples, dtype=np.float64).ravel()
        if x.size < 2:
            raise InvalidArgument("need at least two samples")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size), z)


def mc_estimate(
    sampler: Callable[[RandomStream], float], n: int, stream: RandomStream, z: float = DEFAULT_Z
) -> McEstimate:
    """Average ``n`` draws of ``sampler(stream)``."""
    if n < 2:
        raise InvalidArgument("mc_estimate needs n >= 2")
    draws = np.fromiter((sampler(stream) for _ in range(n)), dtype=np.float64, count=n)
    return McEstimate.from_samples(draws, z)


def variance_estimate(samples, z: float = DEFAULT_Z) -> McEstimate:
    """Unbiased sample variance with its delta-method standard error."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise InvalidArgument("need at least two samples")
    c = x - x.mean()
    s2 = float(c @ c / (n - 1))
    m4 = float(np.mean(c**4))
    se = math.sqrt(max(m4 - s2 * s2, 0.0) / n)
    return McEstimate(s2, se, n, z)


def _eval_cdf(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(cdf(x), dtype=np.float64)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([cdf(float(v)) for v in x], dtype=np.float64)


def ks_statistic(samples, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise InvalidArgument("ks_statistic needs at least one sample")
    f = _eval_cdf(cdf, x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical_value(n: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (1.63/sqrt(n) at the 1% level)."""
    table = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63, 0.001: 1.95}
    if level not in table:
        raise InvalidArgument(f"level must be one of {sorted(table)}")
    return table[level] / math.sqrt(n)


def ks_two_sample(a, b) -> float:
    """Two-sample KS distance sup|F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise InvalidArgument("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample_critical(n: int, m: int, level: float = 0.01) -> float:
    table = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63, 0.001: 1.95}
    return table[level] * math.sqrt((n + m) / (n * m))


def normal_cdf(x):
    """Standard normal CDF accurate in both tails."""
    from scipy.special import ndtr

    return ndtr(x)
