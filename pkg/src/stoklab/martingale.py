"""Discrete-time martingale tools: transforms, Doob decomposition, stopping, audits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .discrete import FiniteChain
from .errors import InvalidArgument
from .kernels.martingale import upcrossings_rows
from .simcore import DEFAULT_Z, McEstimate, Path


def _values(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Path) else x)


def predictable_transform(H: Path, X: Path) -> Path:
    """Martingale transform (H.X)_n = sum_{m<=n} H_m (X_m - X_{m-1}).

    ``H.values[m]`` is the stake on step m and must be computable from
    X_0..X_{m-1}; ``H.values[0]`` is never used.
    """
    if len(H) != len(X) or not np.array_equal(H.times, X.times):
        raise InvalidArgument("H and X must share the same time grid")
    h = np.asarray(H.values, dtype=np.float64)
    x = np.asarray(X.values, dtype=np.float64)
    out = np.zeros_like(x)
    if len(X) > 1:
        np.cumsum(h[1:] * np.diff(x, axis=0), axis=0, out=out[1:])
    return Path(X.times, out)


def doubling_stakes(X: Path) -> Path:
    """Doubling strategy on a +-1 coin: stake 2^{m-1} until the first win, then 0."""
    x = np.asarray(X.values)
    n = len(X) - 1
    stakes = np.zeros(x.shape, dtype=np.float64)
    won = np.zeros(x.shape[1:], dtype=bool)
    for m in range(1, n + 1):
        stakes[m] = np.where(won, 0.0, 2.0 ** (m - 1))
        won |= x[m] > x[m - 1]
    return Path(X.times, stakes)


def doubling_strategy_law(n: int) -> dict[Fraction, Fraction]:
    """Exact law of the doubling-strategy wealth Y_n on a fair +-1 coin.

    Enumerates every coin sequence of length n, merging sequences that lead
    to the same (wealth, still playing, next stake) state; probabilities are
    exact fractions.
    """
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    half = Fraction(1, 2)
    states: dict[tuple[int, bool, int], Fraction] = {(0, True, 1): Fraction(1)}
    for _ in range(n):
        nxt: dict[tuple[int, bool, int], Fraction] = {}
        for (y, playing, stake), pr in states.items():
            if playing:
                outcomes = [((y + stake, False, 0), pr * half), ((y - stake, True, 2 * stake), pr * half)]
            else:
                outcomes = [((y, False, 0), pr)]
            for key, q in outcomes:
                nxt[key] = nxt.get(key, Fraction(0)) + q
        states = nxt
    law: dict[Fraction, Fraction] = {}
    for (y, _, _), pr in states.items():
        law[Fraction(y)] = law.get(Fraction(y), Fraction(0)) + pr
    return dict(sorted(law.items()))


# -- Doob decomposition and bracket on a finite chain ---------------------------


@dataclass(frozen=True)
class DoobDecomposition:
    martingale_part: Path
    predictable_part: Path


def _chain_path(chain: FiniteChain, path: Path) -> np.ndarray:
    states = np.asarray(path.values)
    if states.ndim != 1 or not np.issubdtype(states.dtype, np.integer):
        raise InvalidArgument("path must hold integer state indices")
    if np.any(states < 0) or np.any(states >= chain.n_states):
        raise InvalidArgument("path leaves the state space of the chain")
    if states.size > 1 and np.any(chain.transition[states[:-1], states[1:]] == 0.0):
        k = int(np.flatnonzero(chain.transition[states[:-1], states[1:]] == 0.0)[0])
        raise InvalidArgument(f"transition {states[k]} -> {states[k + 1]} at step {k + 1} has probability 0")
    return states


def doob_decomposition_chain(chain: FiniteChain, f, path: Path) -> DoobDecomposition:
    """X_n = f(path_n) = M_n + A_n with A predictable, from exact conditional means.

    A_n - A_{n-1} = (P f)(path_{n-1}) - f(path_{n-1}).
    """
    states = _chain_path(chain, path)
    fv = chain.values_of(f)
    drift = chain.transition @ fv - fv
    a = np.zeros(states.size)
    np.cumsum(drift[states[:-1]], out=a[1:])
    x = fv[states]
    return DoobDecomposition(Path(path.times, x - a), Path(path.times, a))


def compensator_increments(chain: FiniteChain, f) -> np.ndarray:
    """Per-state A-increment (P f)(i) - f(i)."""
    fv = chain.values_of(f)
    return chain.transition @ fv - fv


def bracket_process_chain(chain: FiniteChain, f, path: Path) -> Path:
    """<X>_n = sum_{m<=n} E[(X_m - X_{m-1})^2 | F_{m-1}] with X = f(path)."""
    states = _chain_path(chain, path)
    fv = chain.values_of(f)
    sq = (chain.transition * (fv[None, :] - fv[:, None]) ** 2).sum(axis=1)
    out = np.zeros(states.size)
    np.cumsum(sq[states[:-1]], out=out[1:])
    return Path(path.times, out)


# -- upcrossings -------------------------------------------------------------


def upcrossings(path, a: float, b: float) -> int:
    """Completed upcrossings of [a, b]: wait for a value <= a, then for one >= b."""
    if not a < b:
        raise InvalidArgument("need a < b")
    v = np.asarray(_values(path), dtype=np.float64).ravel()
    return int(upcrossings_rows(v[None, :], a, b)[0])


def upcrossings_batch(paths: np.ndarray, a: float, b: float) -> np.ndarray:
    """Upcrossing counts for each row of a (n_paths, n_times) array."""
    if not a < b:
        raise InvalidArgument("need a < b")
    return upcrossings_rows(paths, a, b)


# -- stopping rules -------------------------------------------------------------


class StoppingRule:
    """A stopping time: ``first_time(values)`` is the smallest n at which it fires.

    Implementations look at ``values[: n + 1]`` only when deciding whether the
    rule has fired by time n.
    """

    def first_time(self, values: np.ndarray) -> int | None:
        raise NotImplementedError

    def stopped_by(self, prefix) -> bool:
        """True when the rule has fired within the observed prefix."""
        return self.first_time(np.asarray(_values(prefix))) is not None


@dataclass(frozen=True)
class FirstEntry(StoppingRule):
    """First time the path enters ``target``: a collection of values or a predicate."""

    target: object

    def _hits(self, values: np.ndarray) -> np.ndarray:
        if callable(self.target):
            return np.fromiter((bool(self.target(v)) for v in values), dtype=bool, count=len(values))
        return np.isin(values, np.asarray(list(self.target)))

    def first_time(self, values):
        hits = np.flatnonzero(self._hits(np.asarray(values)))
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class FixedTime(StoppingRule):
    n: int

    def first_time(self, values):
        return self.n if self.n < len(values) else None


@dataclass(frozen=True)
class MinRule(StoppingRule):
    first: StoppingRule
    second: StoppingRule

    def first_time(self, values):
        times = [t for t in (self.first.first_time(values), self.second.first_time(values)) if t is not None]
        return min(times) if times else None


@dataclass(frozen=True)
class MaxRule(StoppingRule):
    first: StoppingRule
    second: StoppingRule

    def first_time(self, values):
        s, t = self.first.first_time(values), self.second.first_time(values)
        return None if s is None or t is None else max(s, t)


def stopping_time(rule: StoppingRule, path) -> int | None:
    return rule.first_time(np.asarray(_values(path)))


def stopped_path(path: Path, N: int | None) -> Path:
    """X_{n ^ N}; an unfired rule (None) leaves the path unchanged."""
    if N is None:
        return path
    values = np.array(path.values, copy=True)
    values[N + 1 :] = values[N]
    return Path(path.times, values)


# -- maximal inequalities ------------------------------------------------------------


class InequalityAudit(NamedTuple):
    lhs: McEstimate
    rhs: McEstimate

    @property
    def margin(self) -> float:
        """rhs - lhs; positive when the inequality holds on average."""
        return self.rhs.mean - self.lhs.mean

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.lhs.stderr, self.rhs.stderr)

    def holds(self, z: float = DEFAULT_Z) -> bool:
        return self.lhs.mean <= self.rhs.mean + z * self.combined_stderr


def maximal_inequality_audit(paths, lam: float | None, p: float | None = None) -> InequalityAudit:
    """Empirical sides of Doob's maximal inequalities for a submartingale sample.

    ``paths`` is a (n_paths, n_times) array or an iterable of such chunks.
    Without ``p``: lhs = P[max_m X_m >= lam], rhs = E[X_n^+] / lam.
    With ``p > 1``: lhs = E[max_m (X_m^+)^p], rhs = (p/(p-1))^p E[(X_n^+)^p];
    ``lam`` is then ignored.
    """
    chunks = [paths] if isinstance(paths, np.ndarray) else paths
    maxima, finals = [], []
    for chunk in chunks:
        x = np.asarray(chunk, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        maxima.append(x.max(axis=1))
        finals.append(x[:, -1])
    return audit_from_summary(np.concatenate(maxima), np.concatenate(finals), lam, p)


def audit_from_summary(running_max: np.ndarray, final: np.ndarray, lam: float | None, p: float | None = None) -> InequalityAudit:
    """Same as :func:`maximal_inequality_audit` from per-path (max_m X_m, X_n)."""
    if p is None:
        if lam is None or not lam > 0:
            raise InvalidArgument("lam must be positive")
    elif not p > 1:
        raise InvalidArgument("p must exceed 1")
    running_max = np.asarray(running_max, dtype=np.float64)
    final_pos = np.maximum(np.asarray(final, dtype=np.float64), 0.0)
    if p is None:
        lhs = (running_max >= lam).astype(np.float64)
        rhs = final_pos / lam
    else:
        lhs = np.maximum(running_max, 0.0) ** p
        rhs = (p / (p - 1)) ** p * final_pos**p
    return InequalityAudit(McEstimate.from_samples(lhs), McEstimate.from_samples(rhs))


def walk_chunks(stream, n_paths: int, n_steps: int, chunk: int = 10_000, transform: Callable | None = None) -> Iterable:
    """Yield symmetric-walk path chunks (optionally transformed), path p on stream id + p."""
    from .discrete import random_walk_batch

    for start in range(0, n_paths, chunk):
        sub = stream.substream(start)
        walks = random_walk_batch(sub, n_steps, min(chunk, n_paths - start)).astype(np.float64)
        yield walks if transform is None else transform(walks)
