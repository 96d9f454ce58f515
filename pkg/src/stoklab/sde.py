"""Strong solutions of dX = f(X, t) dt + g(X, t) dB: Euler, Picard, closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .brownian import bm_batch, sample_bm_increments
from .errors import ExplosionError, InvalidArgument
from .ito import ito_integral_leftpoint, time_integral_leftpoint
from .simcore import Path, RandomStream

EXPLOSION_BOUND = 1e12


@dataclass(frozen=True)
class DiffusionSpec:
    """Coefficients of dX = f dt + g dB as elementwise functions ``(x, t)``.

    The optional x-derivatives are used by the generator/adjoint evaluators
    in place of finite differences.
    """

    drift: Callable
    diffusion: Callable
    drift_dx: Callable | None = None
    diffusion_dx: Callable | None = None
    diffusion_dxx: Callable | None = None
    drift_dxx: Callable | None = None
    name: str = "custom"

    def f(self, x, t=0.0):
        return _backend.python_function(self.drift)(x, t)

    def g(self, x, t=0.0):
        return _backend.python_function(self.diffusion)(x, t)


def _spec(name, f, g, fx=None, gx=None, gxx=None, fxx=None) -> DiffusionSpec:
    c = _backend.coefficient
    return DiffusionSpec(
        c(f), c(g),
        None if fx is None else c(fx), None if gx is None else c(gx), None if gxx is None else c(gxx),
        None if fxx is None else c(fxx), name,
    )


def _zero(x, t):
    return 0.0 * x


def _one(x, t):
    return 0.0 * x + 1.0


def brownian_spec() -> DiffusionSpec:
    return _spec("brownian", _zero, _one, _zero, _zero, _zero, _zero)


def drifted_bm_spec(mu: float, sigma: float = 1.0) -> DiffusionSpec:
    mu, sigma = float(mu), float(sigma)

    def f(x, t):
        return 0.0 * x + mu

    def g(x, t):
        return 0.0 * x + sigma

    return _spec(f"drifted-bm(mu={mu:g})", f, g, _zero, _zero, _zero, _zero)


def ou_spec(sigma: float = 1.0, theta: float = 1.0) -> DiffusionSpec:
    """dX = -theta X dt + sigma dB."""
    sigma, theta = float(sigma), float(theta)

    def f(x, t):
        return -theta * x

    def fx(x, t):
        return 0.0 * x - theta

    def g(x, t):
        return 0.0 * x + sigma

    return _spec(f"ou(sigma={sigma:g})", f, g, fx, _zero, _zero, _zero)


def gbm_spec(r: float, sigma: float = 1.0) -> DiffusionSpec:
    """dX = r X dt + sigma X dB."""
    r, sigma = float(r), float(sigma)

    def f(x, t):
        return r * x

    def fx(x, t):
        return 0.0 * x + r

    def g(x, t):
        return sigma * x

    def gx(x, t):
        return 0.0 * x + sigma

    return _spec(f"gbm(r={r:g})", f, g, fx, gx, _zero, _zero)


def ehrenfest_limit_spec() -> DiffusionSpec:
    """Diffusion limit of the rescaled Ehrenfest chain: dX = -2X dt + dB."""
    return ou_spec(1.0, 2.0)


def sine_spec() -> DiffusionSpec:
    """dX = -X/2 dt + sqrt(1 - X^2) dB, solved by X = sin(B) up to |B| = pi/2.

    The square root is clamped at 0 outside [-1, 1], where rounding may push X.
    """

    def f(x, t):
        return -0.5 * x

    def g(x, t):
        return np.sqrt(np.maximum(1.0 - x * x, 0.0))

    return _spec("sine", f, g)


def special_linear_spec() -> DiffusionSpec:
    """dX = -X/(1+t) dt + dB/(1+t), solved by B_t/(1+t)."""

    def f(x, t):
        return -x / (1.0 + t)

    def g(x, t):
        return 0.0 * x + 1.0 / (1.0 + t)

    return _spec("special-linear", f, g)


def special_linear_model() -> ExactModel:
    return ExactModel(
        "linear-additive",
        {"a": lambda t: -1.0 / (1.0 + t), "b": lambda t: 0.0 * t, "c": lambda t: 1.0 / (1.0 + t), "A": lambda t: -np.log1p(t)},
    )


def bridge_spec(b: float) -> DiffusionSpec:
    """Brownian bridge towards b at t = 1: dX = (b - X)/(1 - t) dt + dB."""
    b = float(b)

    def f(x, t):
        return (b - x) / (1.0 - t)

    return _spec(f"bridge(b={b:g})", f, _one)


def integrating_factor_spec(r: float, alpha: float) -> DiffusionSpec:
    """dY = r dt + alpha Y dB."""
    r, alpha = float(r), float(alpha)

    def f(x, t):
        return 0.0 * x + r

    def g(x, t):
        return alpha * x

    return _spec(f"integrating-factor(r={r:g},alpha={alpha:g})", f, g)


# -- Euler-Maruyama and Picard ------------------------------------------------------------


def _check_finite(x: np.ndarray, t: float) -> None:
    bad = ~np.isfinite(x) | (np.abs(x) > EXPLOSION_BOUND)
    if np.any(bad):
        raise ExplosionError(t)


def _driving_path(grid, stream, bm, n_paths) -> Path:
    if bm is not None:
        if grid is not None and not np.array_equal(np.asarray(grid, dtype=np.float64), bm.times):
            raise InvalidArgument("grid differs from the driving path's grid")
        return bm
    if stream is None:
        raise InvalidArgument("provide a stream or a driving path")
    if n_paths is None:
        return sample_bm_increments(stream, grid)
    return bm_batch(stream, grid, n_paths)


def euler_maruyama(
    spec: DiffusionSpec,
    x0,
    grid=None,
    stream: RandomStream | None = None,
    bm: Path | None = None,
    n_paths: int | None = None,
) -> Path:
    """X_{k+1} = X_k + f(X_k, t_k) dt_k + g(X_k, t_k) dB_k.

    Driving increments come from ``bm`` or are sampled from ``stream``
    (one path, or ``n_paths`` on a shared grid).  A non-finite state or
    |X| > 1e12 raises :class:`ExplosionError` carrying the time reached.
    """
    path = _driving_path(grid, stream, bm, n_paths)
    t = path.times
    b = np.asarray(path.values, dtype=np.float64)
    f, g = _backend.python_function(spec.drift), _backend.python_function(spec.diffusion)
    out = np.empty_like(b)
    x = np.broadcast_to(np.asarray(x0, dtype=np.float64), b.shape[1:]).astype(np.float64)
    out[0] = x
    for k in range(t.size - 1):
        dt = t[k + 1] - t[k]
        x = x + f(x, t[k]) * dt + g(x, t[k]) * (b[k + 1] - b[k])
        _check_finite(x, t[k + 1])
        out[k + 1] = x
    return Path(t, out)


def picard_iterate(spec: DiffusionSpec, x0, grid, bm: Path, k: int) -> list[Path]:
    """Iterates X^(0) = x0, X^(j+1)_t = x0 + int f(X^(j)) ds + int g(X^(j)) dB.

    Both integrals use the left-point rule of :mod:`stoklab.ito`, so on a grid
    with n steps the iterates coincide with the Euler path from j = n on.
    """
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    bm = _driving_path(grid, None, bm, None)
    t = bm.times
    b = np.asarray(bm.values, dtype=np.float64)
    f, g = _backend.python_function(spec.drift), _backend.python_function(spec.diffusion)
    tt = t.reshape((-1,) + (1,) * (b.ndim - 1))
    x = np.broadcast_to(np.asarray(x0, dtype=np.float64), b.shape).astype(np.float64)
    iterates = [Path(t, x.copy())]
    for _ in range(k):
        drift = time_integral_leftpoint(f(x, tt), bm).values
        noise = ito_integral_leftpoint(g(x, tt), bm).values
        x = x0 + drift + noise
        bad = ~np.isfinite(x) | (np.abs(x) > EXPLOSION_BOUND)
        if bad.any():
            rows = bad.reshape(t.size, -1).any(axis=1)
            raise ExplosionError(t[int(np.argmax(rows))])
        iterates.append(Path(t, x))
    return iterates


# -- closed-form solutions ---------------------------------------------------------------

_REQUIRED = {
    "linear-additive": {"a", "b", "c"},
    "linear-multiplicative": {"a", "sigma"},
    "ou": {"sigma", "theta"},
    "gbm": {"r", "sigma"},
    "brownian-bridge": {"start", "end"},
    "drifted-bm": {"mu", "sigma"},
    "integrating-factor": {"r", "alpha"},
}
# linear-additive may carry the antiderivative A(t) = int_0^t a ds in closed form
_OPTIONAL = {"linear-additive": {"A"}}


@dataclass(frozen=True)
class ExactModel:
    """A linear SDE with a closed-form strong solution, identified by ``tag``.

    Required parameters per tag (``a``, ``b``, ``c``, ``sigma`` in the linear
    tags are functions of t; the rest are numbers):

    ==========================  ===============================================
    linear-additive             dX = (a X + b) dt + c dB, optional ``A`` = int a
    linear-multiplicative       dX = a X dt + sigma X dB
    ou                          dX = -theta X dt + sigma dB
    gbm                         dX = r X dt + sigma X dB
    brownian-bridge             from ``start`` at 0 to ``end`` at 1
    drifted-bm                  dX = mu dt + sigma dB
    integrating-factor          dY = r dt + alpha Y dB
    ==========================  ===============================================
    """

    tag: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in _REQUIRED:
            raise InvalidArgument(f"unknown model tag {self.tag!r}")
        given = set(self.params) - _OPTIONAL.get(self.tag, set())
        if given != _REQUIRED[self.tag] or not set(self.params) >= _REQUIRED[self.tag]:
            raise InvalidArgument(f"{self.tag} needs parameters {sorted(_REQUIRED[self.tag])}, got {sorted(given)}")

    def spec(self) -> DiffusionSpec:
        p = self.params
        if self.tag == "gbm":
            return gbm_spec(p["r"], p["sigma"])
        if self.tag == "ou":
            return ou_spec(p["sigma"], p["theta"])
        if self.tag == "drifted-bm":
            return drifted_bm_spec(p["mu"], p["sigma"])
        if self.tag == "brownian-bridge":
            return bridge_spec(p["end"])
        if self.tag == "integrating-factor":
            return integrating_factor_spec(p["r"], p["alpha"])
        if self.tag == "linear-additive":
            a, b, c = p["a"], p["b"], p["c"]
            return DiffusionSpec(lambda x, t: a(t) * x + b(t), lambda x, t: 0.0 * x + c(t), name="linear-additive")
        a, s = p["a"], p["sigma"]
        return DiffusionSpec(lambda x, t: a(t) * x, lambda x, t: s(t) * x, name="linear-multiplicative")


def _deterministic(fn, t):
    return np.asarray(fn(t), dtype=np.float64) * np.ones_like(t)


def _col(v: np.ndarray, ndim: int) -> np.ndarray:
    return v.reshape((-1,) + (1,) * (ndim - 1))


def exact_solution(model: ExactModel, bm: Path, x0) -> Path:
    """Closed-form solution driven by ``bm``; integral terms use left-point sums."""
    t = bm.times
    b = np.asarray(bm.values, dtype=np.float64)
    nd = b.ndim
    tc = _col(t, nd)
    p = model.params
    x0 = np.asarray(x0, dtype=np.float64)
    if model.tag == "gbm":
        r, s = p["r"], p["sigma"]
        return Path(t, x0 * np.exp((r - 0.5 * s * s) * tc + s * b))
    if model.tag == "drifted-bm":
        return Path(t, x0 + p["mu"] * tc + p["sigma"] * b)
    if model.tag == "ou":
        theta, s = p["theta"], p["sigma"]
        weights = _col(np.exp(theta * t), nd) * np.ones_like(b)
        stoch = ito_integral_leftpoint(weights, bm).values
        return Path(t, np.exp(-theta * tc) * (x0 + s * stoch))
    if model.tag == "brownian-bridge":
        if t[-1] >= 1.0:
            raise InvalidArgument("the bridge representation needs times in [0, 1)")
        a, e = p["start"], p["end"]
        weights = _col(1.0 / (1.0 - t), nd) * np.ones_like(b)
        stoch = ito_integral_leftpoint(weights, bm).values
        return Path(t, a * (1.0 - tc) + e * tc + (1.0 - tc) * stoch)
    if model.tag == "integrating-factor":
        r, al = p["r"], p["alpha"]
        F = np.exp(-al * b + 0.5 * al * al * tc)
        acc = time_integral_leftpoint(F, bm).values
        return Path(t, (x0 + r * acc) / F)
    if model.tag == "linear-multiplicative":
        a = _col(_deterministic(p["a"], t), nd) * np.ones_like(b)
        s = _col(_deterministic(p["sigma"], t), nd) * np.ones_like(b)
        stoch = ito_integral_leftpoint(s, bm).values
        drift = time_integral_leftpoint(a - 0.5 * s * s, bm).values
        return Path(t, x0 * np.exp(stoch + drift))
    # linear-additive: X_t = e^{A(t)} [x0 + int e^{-A} b ds + int e^{-A} c dB]
    if "A" in p:
        A = _deterministic(p["A"], t)
    else:
        a = _deterministic(p["a"], t)
        A = np.zeros_like(t)
        np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(t), out=A[1:])
    ones = np.ones_like(b)
    drift = time_integral_leftpoint(_col(np.exp(-A) * _deterministic(p["b"], t), nd) * ones, bm).values
    stoch = ito_integral_leftpoint(_col(np.exp(-A) * _deterministic(p["c"], t), nd) * ones, bm).values
    return Path(t, _col(np.exp(A), nd) * (x0 + drift + stoch))


# -- strong convergence ---------------------------------------------------------------------


def strong_error_table(
    spec: DiffusionSpec,
    model: ExactModel,
    dts,
    T: float,
    n_paths: int,
    stream: RandomStream,
    x0: float = 1.0,
) -> list[tuple[float, float, float]]:
    """(dt, mean |X^Euler_T - X_T|, stderr) for each step size on shared noise.

    One Brownian ensemble is sampled on the finest grid; coarser Euler runs
    use its subsampled values and the exact solution is evaluated on the
    finest grid.
    """
    dts = sorted((float(d) for d in dts), reverse=True)
    n_fine = int(round(T / dts[-1]))
    fine = bm_batch(stream, np.linspace(0.0, T, n_fine + 1), n_paths)
    exact_T = exact_solution(model, fine, x0).values[-1]
    table = []
    for dt in dts:
        stride = int(round(dt / dts[-1]))
        if n_fine % stride or abs(stride * dts[-1] - dt) > 1e-12 * dt:
            raise InvalidArgument("step sizes must divide each other and T")
        coarse = Path(fine.times[::stride], fine.values[::stride])
        err = np.abs(euler_maruyama(spec, x0, bm=coarse).values[-1] - exact_T)
        table.append((dt, float(err.mean()), float(err.std(ddof=1) / math.sqrt(n_paths))))
    return table


def loglog_slope(table) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    dt = np.array([row[0] for row in table])
    err = np.array([row[1] for row in table])
    if np.any(err <= 0):
        raise InvalidArgument("errors must be positive to fit a slope")
    return float(np.polyfit(np.log(dt), np.log(err), 1)[0])
