"""Ito and Stratonovich sums against sampled Brownian paths.

An integrand is one of

* a number (constant integrand),
* a callable ``f(t, prefix)`` where ``prefix`` is a read-only view of the
  path values up to and including time ``t`` (time is the first axis), or
* an array aligned with the path grid, holding an adapted process the caller
  already computed.

Because callables only ever see prefixes, an integrand cannot peek ahead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .brownian import bm_batch
from .errors import InvalidArgument
from .simcore import McEstimate, Path, RandomStream


def _readonly(values: np.ndarray) -> np.ndarray:
    view = values.view()
    view.flags.writeable = False
    return view


def integrand_on_grid(f, bm: Path) -> np.ndarray:
    """Evaluate an integrand at every grid point of ``bm`` (shape of ``bm.values``)."""
    values = np.asarray(bm.values, dtype=np.float64)
    if callable(f):
        frozen = _readonly(values)
        out = np.empty_like(values)
        for k, t in enumerate(bm.times):
            out[k] = f(t, frozen[: k + 1])
        return out
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim == 0:
        return np.full_like(values, float(arr))
    if arr.shape != values.shape:
        raise InvalidArgument(f"integrand array shape {arr.shape} does not match path {values.shape}")
    return arr


def _running(terms: np.ndarray, times: np.ndarray) -> Path:
    out = np.zeros((terms.shape[0] + 1,) + terms.shape[1:])
    np.cumsum(terms, axis=0, out=out[1:])
    return Path(times, out)


def ito_integral_leftpoint(f, bm: Path) -> Path:
    """Running left-point sum sum_k f(t_k) (B_{t_{k+1}} - B_{t_k})."""
    e = integrand_on_grid(f, bm)
    db = np.diff(np.asarray(bm.values, dtype=np.float64), axis=0)
    return _running(e[:-1] * db, bm.times)


def stratonovich_integral_midpoint(f, bm: Path) -> Path:
    """Running sum of (f(t_k) + f(t_{k+1}))/2 (B_{t_{k+1}} - B_{t_k})."""
    e = integrand_on_grid(f, bm)
    db = np.diff(np.asarray(bm.values, dtype=np.float64), axis=0)
    return _running(0.5 * (e[:-1] + e[1:]) * db, bm.times)


def time_integral_leftpoint(f, path: Path) -> Path:
    """Running left-point quadrature sum_k f(t_k) (t_{k+1} - t_k)."""
    e = integrand_on_grid(f, path)
    dt = np.diff(path.times).reshape((-1,) + (1,) * (e.ndim - 1))
    return _running(e[:-1] * dt, path.times)


# -- simple integrands ------------------------------------------------------------


@dataclass(frozen=True)
class SimpleIntegrand:
    """Step integrand e_{t_{k-1}} on [t_{k-1}, t_k).

    ``values[k]`` is a number or a callable of the path prefix up to
    ``t_k`` (i.e. the left end of interval k).  ``second_moment[k]``, when
    given, is E[e_{t_k}^2] and makes the isometry right side exact.
    """

    partition: np.ndarray
    values: Sequence
    second_moment: Sequence[float] | None = None

    def __post_init__(self):
        p = np.asarray(self.partition, dtype=np.float64)
        if p.ndim != 1 or p.size < 2 or p[0] != 0.0 or not np.all(np.diff(p) > 0):
            raise InvalidArgument("partition must start at 0 and increase strictly")
        if len(self.values) != p.size - 1:
            raise InvalidArgument("need one value per partition interval")
        if self.second_moment is not None and len(self.second_moment) != p.size - 1:
            raise InvalidArgument("need one second moment per partition interval")
        object.__setattr__(self, "partition", p)

    @property
    def T(self) -> float:
        return float(self.partition[-1])

    @classmethod
    def constant(cls, c: float, T: float = 1.0) -> "SimpleIntegrand":
        return cls(np.array([0.0, T]), [float(c)], [float(c) ** 2])

    @classmethod
    def dyadic_bm(cls, n: int, T: float = 1.0) -> "SimpleIntegrand":
        """e_t = B at the dyadic point just left of t, mesh T 2^-n; E[e^2] = t_{k-1}."""
        part = np.linspace(0.0, T, 2**n + 1)
        return cls(part, [lambda prefix: prefix[-1]] * 2**n, list(part[:-1]))

    def evaluate(self, k: int, prefix: np.ndarray):
        v = self.values[k]
        return v(prefix) if callable(v) else v

    def rhs(self) -> float | None:
        """Exact int_0^T E[e_s^2] ds, or None if a random value lacks its second moment."""
        dt = np.diff(self.partition)
        if self.second_moment is not None:
            return float(np.dot(self.second_moment, dt))
        if any(callable(v) for v in self.values):
            return None
        return float(np.dot(np.square(np.asarray(self.values, dtype=np.float64)), dt))


def _partition_indices(e: SimpleIntegrand, times: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(times, e.partition)
    ok = idx < times.size
    ok[ok] &= np.abs(times[idx[ok]] - e.partition[ok]) <= 1e-12 * max(1.0, e.T)
    if not ok.all():
        raise InvalidArgument("the path grid must contain every partition point")
    return idx


def ito_integral_simple(e: SimpleIntegrand, bm: Path) -> Path:
    """Running integral sum_k e_{t_{k-1}} (B_{t ^ t_k} - B_{t ^ t_{k-1}}) on the path grid.

    The integrand vanishes after the last partition point.
    """
    idx = _partition_indices(e, bm.times)
    values = np.asarray(bm.values, dtype=np.float64)
    frozen = _readonly(values)
    out = np.zeros_like(values)
    acc = np.zeros(values.shape[1:])
    for k in range(idx.size - 1):
        i0, i1 = idx[k], idx[k + 1]
        ek = np.asarray(e.evaluate(k, frozen[: i0 + 1]), dtype=np.float64)
        out[i0 : i1 + 1] = acc + ek * (values[i0 : i1 + 1] - values[i0])
        acc = out[i1].copy()
    out[idx[-1] :] = acc
    return Path(bm.times, out)


def isometry_audit(
    e: SimpleIntegrand, n_paths: int, stream: RandomStream, grid=None
) -> tuple[McEstimate, float]:
    """(E-hat[(int e dB)^2], int E[e^2] ds) over ``n_paths`` Brownian paths.

    Paths are sampled on ``grid`` (default: the partition).  When a random
    value has no declared second moment the right side falls back to the
    sample mean of int e^2 ds on the same paths.
    """
    grid = e.partition if grid is None else np.asarray(grid, dtype=np.float64)
    bm = bm_batch(stream, grid, n_paths)
    integral = ito_integral_simple(e, bm).values[-1]
    lhs = McEstimate.from_samples(integral**2)
    rhs = e.rhs()
    if rhs is None:
        idx = _partition_indices(e, bm.times)
        frozen = _readonly(np.asarray(bm.values, dtype=np.float64))
        sq = sum(
            np.asarray(e.evaluate(k, frozen[: idx[k] + 1]), dtype=np.float64) ** 2 * (e.partition[k + 1] - e.partition[k])
            for k in range(idx.size - 1)
        )
        rhs = float(np.mean(sq))
    return lhs, float(rhs)


# -- exponential martingale ------------------------------------------------------------


def exponential_supermartingale(g, bm: Path) -> Path:
    """M_t = exp(int_0^t g dB - 1/2 int_0^t g^2 ds), both integrals left-point."""
    e = integrand_on_grid(g, bm)
    stoch = ito_integral_leftpoint(e, bm).values
    drift = time_integral_leftpoint(e * e, bm).values
    return Path(bm.times, np.exp(stoch - 0.5 * drift))


def bernstein_audit(
    phi: Callable[[np.ndarray], np.ndarray], lam: float, T: float, n_steps: int, n_paths: int, stream: RandomStream
) -> tuple[McEstimate, float]:
    """(P-hat[max_{s<=T} int_0^s phi dB > lam], exp(-lam^2 / (2 Phi(T)))) for deterministic phi.

    Phi(T) = int_0^T phi^2 ds is evaluated with the same left-point rule as
    the stochastic sum, so both sides refer to the same discretised process.
    """
    grid = np.linspace(0.0, T, n_steps + 1)
    bm = bm_batch(stream, grid, n_paths)
    weights = np.asarray(phi(grid), dtype=np.float64) * np.ones_like(grid)
    integral = ito_integral_leftpoint(weights[:, None] * np.ones((1, n_paths)), bm).values
    big_phi = float(np.sum(weights[:-1] ** 2 * np.diff(grid)))
    lhs = McEstimate.from_samples((integral.max(axis=0) > lam).astype(np.float64))
    return lhs, math.exp(-lam * lam / (2.0 * big_phi))
