"""Monte Carlo exit statistics, ball exits, occupation times, Ehrenfest limit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..brownian import MONITORING_BETA
from ..discrete import FiniteChain
from ..errors import InvalidArgument, PecletError
from ..kernels import exit as exit_kern
from ..sde import DiffusionSpec
from ..simcore import McEstimate, RandomStream
from . import closed_forms
from .bvp import laplace_bvp, required_grid_size, solve_sequence

DEFAULT_TIME_BUDGET = 1000.0
MAX_BVP_GRID = 200_000


@dataclass(frozen=True)
class ExitStatistics:
    """Exit-time functionals estimated from one ensemble of Euler paths.

    ``bias`` maps each statistic name to its declared discretisation
    allowance (None when no allowance could be computed, e.g. a one-sided
    interval).  ``n_not_exited`` paths ran out of time budget; their exit
    time is recorded as the budget.
    """

    p_hit_a: McEstimate
    p_hit_b: McEstimate
    mean_tau: McEstimate
    mean_tau_sq: McEstimate
    tau_hit_a: McEstimate
    tau_hit_b: McEstimate
    laplace: dict
    n_not_exited: int
    bias: dict | None
    tau: np.ndarray = field(repr=False)
    code: np.ndarray = field(repr=False)

    def tau_given_hit_b(self) -> McEstimate:
        """E[tau | hit b first] as a ratio estimate with delta-method stderr."""
        return _ratio(self.tau * (self.code == exit_kern.EXIT_B), (self.code == exit_kern.EXIT_B).astype(float))

    def tau_given_hit_a(self) -> McEstimate:
        return _ratio(self.tau * (self.code == exit_kern.EXIT_A), (self.code == exit_kern.EXIT_A).astype(float))


def _ratio(num: np.ndarray, den: np.ndarray) -> McEstimate:
    n = num.size
    mn, md = num.mean(), den.mean()
    if md == 0:
        raise InvalidArgument("no path reached the conditioning event")
    r = mn / md
    resid = num - r * den
    return McEstimate(float(r), float(resid.std(ddof=1) / (md * math.sqrt(n))), n)


def exit_bias_allowance(
    spec: DiffusionSpec, x0: float, a: float, b: float, dt: float, lambdas=()
) -> dict | None:
    """Declared O(sqrt(dt)) allowance for grid-detected exits.

    Grid monitoring behaves like exact monitoring of a slightly wider
    interval, each end pushed out by BETA g sqrt(dt).  The allowance for each
    statistic is twice the change this shift causes in the BVP solution.
    Returns None for unbounded intervals or when the grid needed by the
    Peclet condition would be too large.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        return None
    sq = MONITORING_BETA * math.sqrt(dt)
    a2 = a - sq * abs(float(spec.g(a)))
    b2 = b + sq * abs(float(spec.g(b)))
    n = 2048
    for lo, hi in ((a, b), (a2, b2)):
        need = required_grid_size(spec, lo, hi)
        if need is None or need > MAX_BVP_GRID:
            return None
        n = max(n, need)
    try:
        base, wide = solve_sequence(spec, a, b, n), solve_sequence(spec, a2, b2, n)
    except PecletError:
        return None
    out = {}
    for key in base:
        out[key] = 2.0 * abs(float(wide[key](x0)) - float(base[key](x0)))
    out["p_b"] = out["p_a"]
    # E[tau 1{hit a}] = E[tau] - E[tau 1{hit b}]
    out["tau_hit_a"] = 2.0 * abs(
        (float(wide["mean_tau"](x0)) - float(wide["tau_hit_b"](x0)))
        - (float(base["mean_tau"](x0)) - float(base["tau_hit_b"](x0)))
    )
    for lam in lambdas:
        out[f"laplace_{lam:g}"] = 2.0 * abs(
            float(laplace_bvp(spec, a2, b2, lam, n)(x0)) - float(laplace_bvp(spec, a, b, lam, n)(x0))
        )
    return out


def mc_exit_statistics(
    spec: DiffusionSpec,
    x0: float,
    a: float,
    b: float,
    dt: float,
    n_paths: int,
    stream: RandomStream,
    lambdas=(),
    t_max: float | None = None,
    with_bias: bool = True,
) -> ExitStatistics:
    """Run Euler paths from x0 until the first grid time outside (a, b).

    ``a`` may be ``-inf`` (one-sided exit).  ``t_max`` caps each path's time
    (default budget 1000); capped paths are counted in ``n_not_exited``.
    Laplace transforms E[exp(-lam tau)] are computed from the same ensemble.
    """
    if not a < x0 < b:
        raise InvalidArgument("need a < x0 < b")
    if not dt > 0 or n_paths < 2:
        raise InvalidArgument("need dt > 0 and n_paths >= 2")
    budget = DEFAULT_TIME_BUDGET if t_max is None else float(t_max)
    max_steps = int(math.ceil(budget / dt - 1e-9))
    tau, code = exit_kern.exit_1d(
        spec.drift, spec.diffusion, x0, a, b, dt, max_steps, stream.master_seed, stream.stream_id, n_paths
    )
    hit_a = (code == exit_kern.EXIT_A).astype(np.float64)
    hit_b = (code == exit_kern.EXIT_B).astype(np.float64)
    laplace = {float(lam): McEstimate.from_samples(np.exp(-lam * tau)) for lam in lambdas}
    bias = exit_bias_allowance(spec, x0, a, b, dt, lambdas) if with_bias and t_max is None else None
    return ExitStatistics(
        p_hit_a=McEstimate.from_samples(hit_a),
        p_hit_b=McEstimate.from_samples(hit_b),
        mean_tau=McEstimate.from_samples(tau),
        mean_tau_sq=McEstimate.from_samples(tau * tau),
        tau_hit_a=McEstimate.from_samples(tau * hit_a),
        tau_hit_b=McEstimate.from_samples(tau * hit_b),
        laplace=laplace,
        n_not_exited=int(np.sum(code == exit_kern.NOT_EXITED)),
        bias=bias,
        tau=tau,
        code=code,
    )


# -- balls and annuli ---------------------------------------------------------------


@dataclass(frozen=True)
class BallExitResult:
    mean_tau: McEstimate
    p_inner_first: McEstimate | None
    n_not_exited: int
    bias: dict
    tau: np.ndarray = field(repr=False)
    code: np.ndarray = field(repr=False)


def mc_ball_exit(
    stream: RandomStream,
    dim: int,
    R: float,
    x0,
    dt: float,
    n_paths: int,
    outer_R: float | None = None,
    kappa: float | None = None,
    dt_max: float | None = None,
    t_max: float = 1e7,
) -> BallExitResult:
    """Isotropic BM in R^dim: exit time of the ball of radius R, or annulus hitting.

    Without ``outer_R`` the path starts inside the ball (|x0| < R) and the
    step is fixed at ``dt``.  With ``outer_R`` it starts in the annulus
    R < |x0| < outer_R, and the step adapts to (kappa * distance)^2 clipped
    to [dt, dt_max] (defaults kappa = 0.15, dt_max = inf), which keeps far-out
    excursions cheap while resolving the boundaries at step ``dt``.
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if x0.size != dim or dim < 1:
        raise InvalidArgument("x0 must have dim coordinates")
    r0 = float(np.linalg.norm(x0))
    annulus = outer_R is not None
    if annulus:
        if not R < r0 < outer_R:
            raise InvalidArgument("annulus mode needs R < |x0| < outer_R")
        kappa = 0.15 if kappa is None else kappa
        dt_max = math.inf if dt_max is None else dt_max
        inner, outer = R, outer_R
    else:
        if not r0 < R:
            raise InvalidArgument("exit-time mode needs |x0| < R")
        kappa = 0.0 if kappa is None else kappa
        dt_max = dt if dt_max is None else dt_max
        inner, outer = 0.0, R
    max_steps = int(min(t_max / dt, 2**62))
    tau, code = exit_kern.ball_exit(
        x0, inner, outer, annulus, dt, dt_max, kappa, max_steps, stream.master_seed, stream.stream_id, n_paths
    )
    shift = MONITORING_BETA * math.sqrt(dt)
    bias = {}
    if annulus:
        p = McEstimate.from_samples((code == exit_kern.EXIT_A).astype(np.float64))
        exact = closed_forms.closed_form("annulus-hit-inner", r=r0, R=R, outer=outer_R, n=dim)
        moved = closed_forms.closed_form("annulus-hit-inner", r=r0, R=R - shift, outer=outer_R + shift, n=dim)
        bias["p_inner_first"] = 2.0 * abs(moved - exact)
    else:
        p = None
        bias["mean_tau"] = 2.0 * abs(((R + shift) ** 2 - R * R) / dim)
    return BallExitResult(
        McEstimate.from_samples(tau), p, int(np.sum(code == exit_kern.NOT_EXITED)), bias, tau, code
    )


# -- occupation time ----------------------------------------------------------------


def arcsine_cdf(u):
    u = np.clip(np.asarray(u, dtype=np.float64), 0.0, 1.0)
    return 2.0 / np.pi * np.arcsin(np.sqrt(u))


def arcsine_occupation(stream: RandomStream, t: float, dt: float, n_paths: int) -> np.ndarray:
    """Per-path fraction of grid times in (0, t] at which B > 0."""
    if not t > 0:
        raise InvalidArgument("t must be positive")
    if not 0 < dt <= 1e-3 * t * (1 + 1e-12):
        raise InvalidArgument("need 0 < dt <= 1e-3 t")
    n_steps = int(round(t / dt))
    return exit_kern.positive_fraction(stream.master_seed, stream.stream_id, n_paths, n_steps, dt)


# -- Ehrenfest diffusion limit -------------------------------------------------------


def ehrenfest_limit_moments(n_balls: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact per-unit-time drift and variance of the rescaled Ehrenfest chain.

    The chain Y on {0..N} is rescaled as X = (Y - N/2)/sqrt(N) with time step
    1/N.  Returns (x, drift, variance) at every state, computed from the
    transition matrix.
    """
    chain = FiniteChain.ehrenfest(n_balls)
    y = np.arange(n_balls + 1, dtype=np.float64)
    x = (y - n_balls / 2.0) / math.sqrt(n_balls)
    dx = (y[None, :] - y[:, None]) / math.sqrt(n_balls)
    mean = (chain.transition * dx).sum(axis=1)
    second = (chain.transition * dx * dx).sum(axis=1)
    return x, mean * n_balls, (second - mean * mean) * n_balls
