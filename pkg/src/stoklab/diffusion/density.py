"""Fokker-Planck evolution d rho/dt = (1/2)(g^2 rho)'' - (f rho)' by implicit Euler."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..errors import InvalidArgument
from ..kernels.thomas import solve_tridiagonal
from ..sde import DiffusionSpec

MASS_DRIFT_WARNING = 1e-3
BOUNDARY_MASS_LIMIT = 1e-6
# fraction of the domain at each end counted as "boundary" for the post-hoc check
BOUNDARY_FRACTION = 0.02


def trapezoid(values: np.ndarray, h: float) -> float:
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))


@dataclass(frozen=True)
class DensityGrid:
    """Density values on the uniform grid ``x`` at time ``t``.

    ``mass_drift`` (relative change of trapezoidal mass since the initial
    density) and ``warning`` are filled in by :func:`evolve_density`.
    """

    x: np.ndarray
    values: np.ndarray
    t: float = 0.0
    mass_drift: float = 0.0
    boundary_mass: float = 0.0
    warning: str | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if x.ndim != 1 or x.size < 3 or v.shape != x.shape:
            raise InvalidArgument("need matching 1-D grid and values with at least 3 points")
        steps = np.diff(x)
        if not np.all(steps > 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise InvalidArgument("grid must be uniform and increasing")
        if np.any(v < -1e-12):
            raise InvalidArgument("density values must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)
        if not self.mass > 0:
            raise InvalidArgument("density must have positive mass")

    @classmethod
    def from_function(cls, fn, a: float, b: float, n: int, t: float = 0.0) -> "DensityGrid":
        x = np.linspace(a, b, n + 1)
        return cls(x, fn(x), t)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def mass(self) -> float:
        return trapezoid(self.values, self.h)

    def l2_distance(self, other) -> float:
        """Trapezoidal L2 distance to another grid density or to a callable."""
        ref = other(self.x) if callable(other) else np.asarray(other.values)
        return math.sqrt(trapezoid((self.values - ref) ** 2, self.h))


def _boundary_mass(values: np.ndarray, h: float) -> float:
    m = max(2, int(BOUNDARY_FRACTION * values.size))
    return trapezoid(values[:m], h) + trapezoid(values[-m:], h)


def _operator_bands(spec: DiffusionSpec, x: np.ndarray, t: float):
    """Bands of the central discretisation of L* at interior nodes (Dirichlet zero ends)."""
    h = x[1] - x[0]
    F = _backend.python_function(spec.drift)(x, t) * np.ones_like(x)
    G = (_backend.python_function(spec.diffusion)(x, t) * np.ones_like(x)) ** 2
    lower = 0.5 * G[:-2] / (h * h) + F[:-2] / (2.0 * h)
    diag = -G[1:-1] / (h * h)
    upper = 0.5 * G[2:] / (h * h) - F[2:] / (2.0 * h)
    return lower, diag, upper


def evolve_density(spec: DiffusionSpec, rho0: DensityGrid, dt: float, T: float) -> DensityGrid:
    """Implicit Euler steps of size ``dt`` up to time ``rho0.t + T``.

    Coefficients are evaluated at the new time level.  The result reports the
    relative mass drift and warns when it exceeds 1e-3 or when more than 1e-6
    of the mass sits near the boundary.
    """
    if not dt > 0 or not T >= 0:
        raise InvalidArgument("need dt > 0 and T >= 0")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise InvalidArgument("T must be a multiple of dt")
    x = rho0.x
    rho = rho0.values.copy()
    rho[0] = rho[-1] = 0.0
    t = rho0.t
    for _ in range(n_steps):
        t = t + dt
        lower, diag, upper = _operator_bands(spec, x, t)
        interior = solve_tridiagonal(-dt * lower, 1.0 - dt * diag, -dt * upper, rho[1:-1])
        rho[1:-1] = interior
    h = rho0.h
    mass0 = rho0.mass
    drift = abs(trapezoid(rho, h) - mass0) / mass0
    boundary = _boundary_mass(rho, h)
    warnings = []
    if drift > MASS_DRIFT_WARNING:
        warnings.append(f"mass drift {drift:.3g} exceeds {MASS_DRIFT_WARNING:g}")
    if boundary > BOUNDARY_MASS_LIMIT:
        warnings.append(f"boundary mass {boundary:.3g} exceeds {BOUNDARY_MASS_LIMIT:g}; widen the grid")
    return DensityGrid(x, np.maximum(rho, 0.0), t, drift, boundary, "; ".join(warnings) or None)
