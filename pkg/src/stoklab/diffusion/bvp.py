"""Stationary boundary-value problems (1/2) g^2 u'' + f u' - q u = theta on [a, b]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InvalidArgument, PecletError
from ..kernels.thomas import solve_tridiagonal
from ..sde import DiffusionSpec

MIN_GRID = 16


@dataclass(frozen=True)
class BvpProblem:
    """Dirichlet problem for the killed generator.

    ``theta`` and ``q`` are callables of x (or numbers); ``q >= 0``.  With
    theta = -1 and zero data the solution is E_x[tau]; with q = lambda,
    theta = 0 and unit data it is E_x[exp(-lambda tau)].
    """

    spec: DiffusionSpec
    a: float
    b: float
    ua: float
    ub: float
    theta: Callable | float = 0.0
    q: Callable | float = 0.0
    n: int = 2048

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidArgument("need a < b")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidArgument("the interval must be bounded")
        if self.n < MIN_GRID:
            raise InvalidArgument(f"grid size must be at least {MIN_GRID}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n + 1)


@dataclass(frozen=True)
class GridFunction:
    """Nodal values on a uniform grid, evaluated between nodes by linear interpolation."""

    x: np.ndarray
    u: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.x, self.u)


def _as_fn(v):
    if callable(v):
        return v
    return lambda x: np.full_like(np.asarray(x, dtype=np.float64), float(v))


def required_grid_size(spec: DiffusionSpec, a: float, b: float, n_probe: int = 4096) -> int | None:
    """Smallest n with |f| h <= g^2 on a fine probe grid, or None if g vanishes where f does not."""
    x = np.linspace(a, b, n_probe + 1)
    f = np.abs(spec.f(x) * np.ones_like(x))
    g2 = (spec.g(x) * np.ones_like(x)) ** 2
    if np.any((g2 == 0) & (f > 0)):
        return None
    ratio = np.max(np.where(f > 0, f / np.where(g2 > 0, g2, 1.0), 0.0))
    return max(MIN_GRID, int(math.ceil((b - a) * ratio)))


def solve_exit_bvp(problem: BvpProblem) -> GridFunction:
    """Central-difference tridiagonal solve with a hard cell-Peclet guard.

    Raises :class:`PecletError` (carrying the grid size that would work)
    when |f| h > g^2 at an interior node, and NumericError on a singular
    system.
    """
    x = problem.grid
    h = x[1] - x[0]
    xi = x[1:-1]
    f = problem.spec.f(xi) * np.ones_like(xi)
    g2 = (problem.spec.g(xi) * np.ones_like(xi)) ** 2
    q = _as_fn(problem.q)(xi) * np.ones_like(xi)
    theta = _as_fn(problem.theta)(xi) * np.ones_like(xi)
    if np.any(q < 0):
        raise InvalidArgument("killing rate q must be nonnegative")
    if np.any(np.abs(f) * h > g2):
        raise PecletError(
            required_grid_size(problem.spec, problem.a, problem.b),
            f"cell Peclet condition |f| h <= g^2 fails with n = {problem.n}",
        )
    lower = 0.5 * g2 / (h * h) - f / (2.0 * h)
    upper = 0.5 * g2 / (h * h) + f / (2.0 * h)
    diag = -g2 / (h * h) - q
    rhs = theta.copy()
    rhs[0] -= lower[0] * problem.ua
    rhs[-1] -= upper[-1] * problem.ub
    interior = solve_tridiagonal(lower, diag, upper, rhs)
    u = np.concatenate([[problem.ua], interior, [problem.ub]])
    return GridFunction(x, u)


def solve_sequence(spec: DiffusionSpec, a: float, b: float, n: int = 2048) -> dict[str, GridFunction]:
    """Exit functionals that chain through each other on one grid.

    ``p_a`` = P[hit a first], ``mean_tau`` = E[tau], ``mean_tau_sq`` = E[tau^2]
    (L v = -2 E[tau]), ``tau_hit_b`` = E[tau 1{hit b first}] (L w = -P[hit b]).
    """
    p_a = solve_exit_bvp(BvpProblem(spec, a, b, 1.0, 0.0, n=n))
    mean_tau = solve_exit_bvp(BvpProblem(spec, a, b, 0.0, 0.0, theta=-1.0, n=n))
    mean_tau_sq = solve_exit_bvp(BvpProblem(spec, a, b, 0.0, 0.0, theta=lambda z: -2.0 * mean_tau(z), n=n))
    tau_hit_b = solve_exit_bvp(BvpProblem(spec, a, b, 0.0, 0.0, theta=lambda z: -(1.0 - p_a(z)), n=n))
    return {"p_a": p_a, "mean_tau": mean_tau, "mean_tau_sq": mean_tau_sq, "tau_hit_b": tau_hit_b}


def laplace_bvp(spec: DiffusionSpec, a: float, b: float, lam: float, n: int = 2048) -> GridFunction:
    """E_x[exp(-lam tau)] via q = lam and unit boundary data."""
    return solve_exit_bvp(BvpProblem(spec, a, b, 1.0, 1.0, q=lam, n=n))
