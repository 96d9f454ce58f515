"""Discrete-time models: walks, Ehrenfest urns, Polya urns, Galton-Watson trees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .kernels import discrete as kern
from .simcore import McEstimate, Path, RandomStream, variance_estimate

GW_POPULATION_CAP = 10**7
POLYA_MAX_N = 25


@dataclass(frozen=True)
class FiniteChain:
    """Row-stochastic transition matrix on states ``0..n-1``.

    ``labels`` attaches a real value to each state (defaults to the index); it
    is the natural ``f`` for martingale computations.
    """

    transition: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InvalidArgument("transition matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise InvalidArgument("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidArgument("rows of the transition matrix must sum to 1")
        object.__setattr__(self, "transition", p)
        labels = np.arange(p.shape[0], dtype=np.float64) if self.labels is None else self.labels
        labels = np.asarray(labels, dtype=np.float64)
        if labels.shape != (p.shape[0],):
            raise InvalidArgument("one label per state is required")
        object.__setattr__(self, "labels", labels)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(self.transition, axis=1)
        cum[:, -1] = 1.0
        return cum

    def values_of(self, f) -> np.ndarray:
        """Evaluate ``f`` (callable on state indices, array, or None for labels) on every state."""
        if f is None:
            return self.labels
        if callable(f):
            return np.asarray([f(i) for i in range(self.n_states)], dtype=np.float64)
        vals = np.asarray(f, dtype=np.float64)
        if vals.shape != (self.n_states,):
            raise InvalidArgument("f must provide one value per state")
        return vals

    @classmethod
    def ehrenfest(cls, n_balls: int) -> "FiniteChain":
        """Number of balls in the left urn; a uniformly chosen ball switches urn."""
        n = n_balls
        p = np.zeros((n + 1, n + 1))
        for i in range(n + 1):
            if i > 0:
                p[i, i - 1] = i / n
            if i < n:
                p[i, i + 1] = 1 - i / n
        return cls(p)

    @classmethod
    def symmetric_walk(cls, half_width: int) -> "FiniteChain":
        """Simple walk on {-L..L}, reflected at the ends; labels are the positions."""
        L = half_width
        n = 2 * L + 1
        p = np.zeros((n, n))
        for i in range(n):
            if i == 0:
                p[0, 1] = 1.0
            elif i == n - 1:
                p[i, i - 1] = 1.0
            else:
                p[i, i - 1] = p[i, i + 1] = 0.5
        return cls(p, labels=np.arange(-L, L + 1, dtype=np.float64))

    @classmethod
    def polya(cls, r0: int, v0: int, c: int, horizon: int) -> "FiniteChain":
        """Polya urn on states (step m, red draws k), labelled by the red proportion.

        The top level ``m = horizon`` is absorbing.  Use :func:`polya_state` to
        map (m, k) to a state index.
        """
        n = (horizon + 1) * (horizon + 2) // 2
        p = np.zeros((n, n))
        labels = np.empty(n)
        for m in range(horizon + 1):
            total = r0 + v0 + m * c
            for k in range(m + 1):
                i = polya_state(m, k)
                labels[i] = (r0 + k * c) / total
                if m == horizon:
                    p[i, i] = 1.0
                else:
                    red = (r0 + k * c) / total
                    p[i, polya_state(m + 1, k + 1)] = red
                    p[i, polya_state(m + 1, k)] = 1.0 - red
        return cls(p, labels=labels)


def polya_state(m: int, k: int) -> int:
    return m * (m + 1) // 2 + k


def simulate_chain(stream: RandomStream, chain: FiniteChain, x0: int, n_steps: int) -> Path:
    if not 0 <= x0 < chain.n_states:
        raise InvalidArgument("x0 is not a state of the chain")
    states = kern.chain_paths(chain.cumulative, x0, stream.master_seed, stream.stream_id, 1, n_steps, stream.counter)
    stream.counter += n_steps
    return Path.on_integers(states[0])


def chain_batch(stream: RandomStream, chain: FiniteChain, x0: int, n_steps: int, n_paths: int) -> np.ndarray:
    """Independent chain trajectories, shape (n_paths, n_steps+1); path p uses stream id + p."""
    return kern.chain_paths(chain.cumulative, x0, stream.master_seed, stream.stream_id, n_paths, n_steps)


# -- random walk ---------------------------------------------------------------


def _walk_from_uniforms(u: np.ndarray, dim: int) -> np.ndarray:
    idx = (u * (2 * dim)).astype(np.int64)
    steps = np.zeros((u.size, dim), dtype=np.int64)
    steps[np.arange(u.size), idx >> 1] = np.where(idx & 1, 1, -1)
    out = np.zeros((u.size + 1, dim), dtype=np.int64)
    np.cumsum(steps, axis=0, out=out[1:])
    return out


def simulate_random_walk(stream: RandomStream, n_steps: int, dim: int = 1) -> Path:
    """Symmetric walk on Z^dim: each step is +-e_j with probability 1/(2 dim)."""
    if n_steps < 0 or dim < 1:
        raise InvalidArgument("need n_steps >= 0 and dim >= 1")
    values = _walk_from_uniforms(stream.uniforms(n_steps), dim)
    return Path.on_integers(values[:, 0] if dim == 1 else values)


def random_walk_batch(stream: RandomStream, n_steps: int, n_paths: int, dim: int = 1) -> np.ndarray:
    """Walk endpoints for many paths at once, shape (n_paths, n_steps+1[, dim])."""
    out = kern.walk_paths(stream.master_seed, stream.stream_id, n_paths, n_steps, dim)
    return out[..., 0] if dim == 1 else out


# -- Ehrenfest -----------------------------------------------------------------


def simulate_ehrenfest(stream: RandomStream, n_balls: int, n_steps: int, x0: int) -> Path:
    if not 0 <= x0 <= n_balls:
        raise InvalidArgument(f"x0 must lie in [0, {n_balls}]")
    return simulate_chain(stream, FiniteChain.ehrenfest(n_balls), x0, n_steps)


def ehrenfest_occupation(
    stream: RandomStream, n_balls: int, x0: int, burn_in: int, window: int, n_chains: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-state occupation frequency over ``window`` steps after ``burn_in``.

    Averaging over a window (rather than reading one time) sidesteps the
    period-2 structure of the chain.  Returns (mean, stderr) across the
    independent chains, one entry per state.
    """
    paths = chain_batch(stream, FiniteChain.ehrenfest(n_balls), x0, burn_in + window, n_chains)
    tail = paths[:, burn_in + 1 :]
    freq = np.stack([(tail == k).mean(axis=1) for k in range(n_balls + 1)], axis=1)
    return freq.mean(axis=0), freq.std(axis=0, ddof=1) / math.sqrt(n_chains)


# -- Polya urn -----------------------------------------------------------------


@dataclass(frozen=True)
class UrnState:
    red: int
    green: int
    c: int

    def __post_init__(self):
        if self.red < 1 or self.green < 1 or self.c < 1:
            raise InvalidArgument("need red, green, c >= 1")

    @property
    def total(self) -> int:
        return self.red + self.green

    @property
    def proportion(self) -> float:
        return self.red / self.total

    def draw(self, u: float) -> "UrnState":
        # object.__new__ skips the >= 1 check, which only applies at initialisation
        if u * self.total < self.red:
            return _urn(self.red + self.c, self.green, self.c)
        return _urn(self.red, self.green + self.c, self.c)


def _urn(red, green, c) -> UrnState:
    state = object.__new__(UrnState)
    object.__setattr__(state, "red", red)
    object.__setattr__(state, "green", green)
    object.__setattr__(state, "c", c)
    return state


def simulate_polya(stream: RandomStream, r0: int, v0: int, c: int, n_steps: int) -> Path:
    """Red proportion X_n = r_n / N_n of a Polya urn."""
    state = UrnState(r0, v0, c)
    props = np.empty(n_steps + 1)
    props[0] = state.proportion
    for k, u in enumerate(stream.uniforms(n_steps), start=1):
        state = state.draw(float(u))
        props[k] = state.proportion
    return Path.on_integers(props)


def polya_batch(stream: RandomStream, r0: int, v0: int, c: int, n_steps: int, n_paths: int) -> np.ndarray:
    """Red proportions for ``n_paths`` independent urns, shape (n_paths, n_steps+1)."""
    UrnState(r0, v0, c)
    reds = kern.polya_reds(r0, v0, c, stream.master_seed, stream.stream_id, n_paths, n_steps)
    totals = r0 + v0 + c * np.arange(n_steps + 1)
    return reds / totals


def polya_exact_law(r0: int, v0: int, c: int, n: int, exact: bool = False) -> list[tuple]:
    """Exact law of X_n by dynamic programming over the number of red draws.

    Returns ``(value, probability)`` pairs sorted by value, as floats, or as
    :class:`fractions.Fraction` when ``exact`` is true.
    """
    UrnState(r0, v0, c)
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    if n > POLYA_MAX_N:
        raise ResourceLimitError(f"exact Polya law limited to n <= {POLYA_MAX_N}")
    probs = [Fraction(1)]
    for m in range(n):
        total = r0 + v0 + m * c
        nxt = [Fraction(0)] * (m + 2)
        for k, pk in enumerate(probs):
            red = Fraction(r0 + k * c, total)
            nxt[k + 1] += pk * red
            nxt[k] += pk * (1 - red)
        probs = nxt
    total = r0 + v0 + n * c
    law = [(Fraction(r0 + k * c, total), pk) for k, pk in enumerate(probs)]
    if exact:
        return law
    return [(float(v), float(p)) for v, p in law]


# -- Galton-Watson -------------------------------------------------------------


@dataclass(frozen=True)
class OffspringDistribution:
    """Law of the number of children, ``probabilities[k] = P[xi = k]``."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise InvalidArgument("probabilities must be a nonempty 1-D sequence")
        if np.any(p < 0):
            raise InvalidArgument("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidArgument("probabilities must sum to 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def binomial(cls, n: int, p: float) -> "OffspringDistribution":
        return cls(np.array([math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)]))

    @property
    def mean(self) -> float:
        return float(np.arange(self.probabilities.size) @ self.probabilities)

    def pgf(self, s):
        """Generating function sum_k p_k s^k (Horner)."""
        acc = np.zeros_like(np.asarray(s, dtype=np.float64))
        for pk in self.probabilities[::-1]:
            acc = acc * s + pk
        return acc

    @property
    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        return cdf


def simulate_galton_watson(stream: RandomStream, offspring: OffspringDistribution, z0: int, n_gen: int) -> Path:
    """Generation sizes Z_0..Z_n; each individual draws its offspring count independently."""
    if z0 < 0:
        raise InvalidArgument("z0 must be nonnegative")
    cdf = offspring.cdf
    kmax = cdf.size - 1
    sizes = np.zeros(n_gen + 1, dtype=np.int64)
    sizes[0] = z = z0
    for g in range(1, n_gen + 1):
        if z == 0:
            break
        if z > GW_POPULATION_CAP:
            raise ResourceLimitError(f"population {z} exceeds cap {GW_POPULATION_CAP} at generation {g - 1}")
        u = stream.uniforms(z)
        z = int(np.minimum(np.searchsorted(cdf, u, side="right"), kmax).sum())
        sizes[g] = z
    if z > GW_POPULATION_CAP:
        raise ResourceLimitError(f"population {z} exceeds cap {GW_POPULATION_CAP}")
    return Path.on_integers(sizes)


def gw_batch(
    stream: RandomStream, offspring: OffspringDistribution, z0: int, n_gen: int, n_trees: int, stop_at: int = 1000
) -> np.ndarray:
    """Generation sizes of independent trees; -1 marks generations skipped after reaching ``stop_at``."""
    return kern.gw_generations(offspring.cdf, z0, stream.master_seed, stream.stream_id, n_trees, n_gen, stop_at)


def gw_extinction_mc(
    stream: RandomStream, offspring: OffspringDistribution, n_trees: int, n_gen: int = 200, stop_at: int = 1000
) -> McEstimate:
    """Fraction of single-ancestor trees extinct within ``n_gen`` generations.

    A tree reaching ``stop_at`` individuals is counted as surviving; for a
    supercritical law the resulting bias is rho**stop_at.
    """
    sizes = gw_batch(stream, offspring, 1, n_gen, n_trees, stop_at)
    extinct = np.any(sizes == 0, axis=1)
    return McEstimate.from_samples(extinct.astype(np.float64))


def gw_extinction_probability(offspring: OffspringDistribution) -> float:
    """Smallest fixed point of the generating function on [0, 1].

    Critical and subcritical laws (mean <= 1) return 1.  Otherwise the root of
    phi(s) - s is bracketed in [0, 1 - 1e-9] and bisected to full precision.
    """
    if offspring.mean <= 1.0:
        return 1.0
    phi = offspring.pgf
    lo, hi = 0.0, 1.0 - 1e-9
    if phi(lo) - lo <= 0.0:
        return 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if phi(mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return float(lo if abs(phi(lo) - lo) <= abs(phi(hi) - hi) else hi)


# -- random sums -----------------------------------------------------------------


def simulate_random_sum(
    stream: RandomStream,
    n_dist: Callable[[RandomStream], int],
    xi_dist: Callable[[RandomStream], float],
    n_samples: int,
) -> McEstimate:
    """Variance of X = xi_1 + ... + xi_N with N drawn first, then N summands."""
    draws = np.empty(n_samples)
    for i in range(n_samples):
        n = int(n_dist(stream))
        draws[i] = sum(xi_dist(stream) for _ in range(n))
    return variance_estimate(draws)
