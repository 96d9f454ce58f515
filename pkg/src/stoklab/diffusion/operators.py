"""Generator L = f d/dx + (1/2) g^2 d^2/dx^2 and its adjoint, pointwise."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .. import _backend
from ..sde import DiffusionSpec


def _step(x):
    return 1e-5 * np.maximum(1.0, np.abs(x))


def _derivatives(fn: Callable, x, d1: Callable | None = None, d2: Callable | None = None):
    """(fn, fn', fn'') at x; missing derivatives by central differences."""
    x = np.asarray(x, dtype=np.float64)
    v = fn(x)
    if d1 is not None and d2 is not None:
        return v, d1(x), d2(x)
    h = _step(x)
    hi, lo = fn(x + h), fn(x - h)
    first = d1(x) if d1 is not None else (hi - lo) / (2.0 * h)
    second = d2(x) if d2 is not None else (hi - 2.0 * v + lo) / (h * h)
    return v, first, second


def _unpack(phi) -> tuple[Callable, Callable | None, Callable | None]:
    if callable(phi):
        return phi, None, None
    fns = list(phi) + [None] * (3 - len(phi))
    return fns[0], fns[1], fns[2]


def _coef(spec: DiffusionSpec, t: float):
    f = _backend.python_function(spec.drift)
    g = _backend.python_function(spec.diffusion)

    def opt(fn):
        return None if fn is None else (lambda x: _backend.python_function(fn)(x, t))

    return (lambda x: f(x, t)), (lambda x: g(x, t)), opt(spec.drift_dx), opt(spec.drift_dxx), opt(
        spec.diffusion_dx
    ), opt(spec.diffusion_dxx)


def apply_generator(spec: DiffusionSpec, phi: Callable | Sequence[Callable], x, t: float = 0.0):
    """(L phi)(x) = f(x) phi'(x) + (1/2) g(x)^2 phi''(x).

    ``phi`` is a callable or a tuple ``(phi, phi', phi'')``; missing
    derivatives are taken by central differences with h = 1e-5 max(1, |x|).
    """
    fn, d1, d2 = _unpack(phi)
    f, g, *_ = _coef(spec, t)
    _, p1, p2 = _derivatives(fn, x, d1, d2)
    x = np.asarray(x, dtype=np.float64)
    gx = g(x)
    return f(x) * p1 + 0.5 * gx * gx * p2


def apply_adjoint(spec: DiffusionSpec, psi: Callable | Sequence[Callable], y, t: float = 0.0):
    """(L* psi)(y) = (1/2) (g^2 psi)'' - (f psi)'.

    Expanded with the product rule, so analytic derivatives of the
    coefficients (from ``spec``) and of ``psi`` are used when available.
    """
    fn, d1, d2 = _unpack(psi)
    f, g, fx, fxx, gx, gxx = _coef(spec, t)
    p0, p1, p2 = _derivatives(fn, y, d1, d2)
    f0, f1, _ = _derivatives(f, y, fx, fxx if fxx is not None else (lambda z: 0.0 * z))
    g0, g1, g2 = _derivatives(g, y, gx, gxx)
    # (g^2)' = 2 g g',  (g^2)'' = 2 (g'^2 + g g'')
    G0 = g0 * g0
    G1 = 2.0 * g0 * g1
    G2 = 2.0 * (g1 * g1 + g0 * g2)
    return 0.5 * (G2 * p0 + 2.0 * G1 * p1 + G0 * p2) - (f1 * p0 + f0 * p1)
