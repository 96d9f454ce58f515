"""Closed-form exit, hitting and Laplace identities used as oracles.

Each entry of :data:`CATALOG` maps a tag to its formula, the parameter names
it takes and a short description of the identity, which reports use as the
oracle source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy.special import erfc

from ..errors import InvalidArgument, NumericError


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with a relative stopping rule."""

    def simpson(fa, fm, fb, width):
        return width * (fa + 4.0 * fm + fb) / 6.0

    # refine on a coarse partition first so narrow peaks are not missed; the
    # coarse total sets the scale of the relative tolerance
    pieces = 16
    edges = [a + (b - a) * i / pieces for i in range(pieces + 1)]
    coarse = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi, fmid = fn(lo), fn(hi), fn(0.5 * (lo + hi))
        coarse.append((lo, hi, flo, fmid, fhi, simpson(flo, fmid, fhi, hi - lo)))
    scale = abs(sum(c[-1] for c in coarse)) or 1.0
    total = 0.0
    for lo, hi, flo, fmid, fhi, est in coarse:
        stack = [(lo, hi, flo, fmid, fhi, est, 0)]
        while stack:
            l, r, fl, fmm, fr, est, depth = stack.pop()
            m = 0.5 * (l + r)
            lm, rm = 0.5 * (l + m), 0.5 * (m + r)
            flm, frm = fn(lm), fn(rm)
            left = simpson(fl, flm, fmm, m - l)
            right = simpson(fmm, frm, fr, r - m)
            err = left + right - est
            if abs(err) <= 15.0 * rel_tol * scale * (r - l) / (b - a) or depth >= max_depth:
                if depth >= max_depth:
                    raise NumericError("adaptive Simpson did not converge")
                total += left + right + err / 15.0
            else:
                stack.append((l, m, fl, flm, fmm, left, depth + 1))
                stack.append((m, r, fmm, frm, fr, right, depth + 1))
    return total


def _interval_hit_a(x, a, b):
    return (b - x) / (b - a)


def _interval_mean_exit(x, a, b):
    return (x - a) * (b - x)


def _symmetric_laplace(x, a, lam):
    s = math.sqrt(2.0 * lam)
    return math.cosh(s * x) / math.cosh(s * a)


def _laplace_hit_a_first(x, a, lam):
    s = math.sqrt(2.0 * lam)
    return math.sinh(s * (x + a)) / math.sinh(2.0 * s * a)


def _symmetric_tau_sq(x, a):
    return (5.0 * a**4 - 6.0 * a * a * x * x + x**4) / 3.0


def _tau_on_hit_a(x, a):
    return (a * a - x * x) * (3.0 * a + x) / (6.0 * a)


def _tau_given_hit_a(x, a):
    return (a - x) * (3.0 * a + x) / 3.0


def _ball_exit(r, R, n):
    return (R * R - r * r) / n


def _radial(r, n):
    return math.log(r) if n == 2 else r ** (2 - n)


def _annulus_hit_inner(r, R, outer, n):
    return (_radial(r, n) - _radial(outer, n)) / (_radial(R, n) - _radial(outer, n))


def _transience(r, R, n):
    return (R / r) ** (n - 2)


def _gbm_gamma(r):
    return 1.0 - 2.0 * r


def _gbm_hit_b_before_a(x, a, b, r):
    g = _gbm_gamma(r)
    if g == 0.0:
        return math.log(x / a) / math.log(b / a)
    return (x**g - a**g) / (b**g - a**g)


def _gbm_hit_b_before_0(x, b, r):
    g = _gbm_gamma(r)
    return (x / b) ** g if g > 0 else 1.0


def _gbm_mean_hit(x, b, r):
    return math.log(b / x) / (r - 0.5)


def _drifted_bm_laplace(a, b, lam):
    # at lam = 0 this is P[tau_a < inf] = e^{-2ab}, not e^{-ab}; the drifted-bm
    # experiment checks the simulated hitting frequency against it
    return math.exp(-a * (b + math.sqrt(b * b + 2.0 * lam)))


def ou_exit_integral(lo: float, hi: float, sigma: float, shift: float) -> float:
    """int_lo^hi exp((y^2 - shift)/sigma^2) dy."""
    s2 = sigma * sigma
    return adaptive_simpson(lambda y: math.exp((y * y - shift) / s2), lo, hi)


def _ou_exit(x, a, b, sigma):
    # P_x[hit a before b] for dX = -X dt + sigma dB; factor out the peak of the integrand
    # and split at x so that the ratio stays in [0, 1] with error ~ h(1-h) * tol
    shift = max(a * a, b * b)
    upper = ou_exit_integral(x, b, sigma, shift) if x < b else 0.0
    lower = ou_exit_integral(a, x, sigma, shift) if x > a else 0.0
    return upper / (lower + upper)


def _max_law(L, t):
    return float(erfc(L / math.sqrt(2.0 * t)))


@dataclass(frozen=True)
class ClosedForm:
    fn: Callable[..., float]
    params: tuple[str, ...]
    source: str
    check: Callable[..., bool]


CATALOG: dict[str, ClosedForm] = {
    "interval-hit-a": ClosedForm(
        _interval_hit_a, ("x", "a", "b"), "BM interval exit P_x[tau_a<tau_b]=(b-x)/(b-a)",
        lambda x, a, b: a <= x <= b and a < b),
    "interval-mean-exit": ClosedForm(
        _interval_mean_exit, ("x", "a", "b"), "BM interval exit E_x[tau]=(x-a)(b-x), |ab| at x=0",
        lambda x, a, b: a <= x <= b and a < b),
    "symmetric-laplace": ClosedForm(
        _symmetric_laplace, ("x", "a", "lam"), "Feynman-Kac E_x[e^{-lam tau}]=cosh(sqrt(2lam)x)/cosh(sqrt(2lam)a)",
        lambda x, a, lam: a > 0 and abs(x) <= a and lam > 0),
    "laplace-hit-a-first": ClosedForm(
        _laplace_hit_a_first, ("x", "a", "lam"),
        "Feynman-Kac E_x[e^{-lam tau};tau_a<tau_-a]=sinh(sqrt(2lam)(x+a))/sinh(2sqrt(2lam)a)",
        lambda x, a, lam: a > 0 and abs(x) <= a and lam > 0),
    "symmetric-tau-sq": ClosedForm(
        _symmetric_tau_sq, ("x", "a"), "BM exit second moment (5a^4-6a^2x^2+x^4)/3, 5a^4/3 at x=0",
        lambda x, a: a > 0 and abs(x) <= a),
    "tau-on-hit-a": ClosedForm(
        _tau_on_hit_a, ("x", "a"), "E_x[tau 1{tau_a<tau_-a}]=(a^2-x^2)(3a+x)/(6a)",
        lambda x, a: a > 0 and abs(x) <= a),
    "tau-given-hit-a": ClosedForm(
        _tau_given_hit_a, ("x", "a"), "E_x[tau | tau_a<tau_-a]=(a-x)(3a+x)/3",
        lambda x, a: a > 0 and -a < x <= a),
    "ball-exit": ClosedForm(
        _ball_exit, ("r", "R", "n"), "ball exit E_x[tau]=(R^2-|x|^2)/n",
        lambda r, R, n: n >= 1 and 0 <= r <= R),
    "annulus-hit-inner": ClosedForm(
        _annulus_hit_inner, ("r", "R", "outer", "n"),
        "annulus p=(phi(|x|)-phi(outer))/(phi(R)-phi(outer)), phi=|x|^{2-n}",
        lambda r, R, outer, n: n >= 2 and 0 < R <= r <= outer and R < outer),
    "transience": ClosedForm(
        _transience, ("r", "R", "n"), "transience P_x[hit ball R]=(R/|x|)^{n-2}",
        lambda r, R, n: n >= 3 and 0 < R <= r),
    "gbm-hit-b-before-a": ClosedForm(
        _gbm_hit_b_before_a, ("x", "a", "b", "r"), "GBM P_x[tau_b<tau_a]=(x^g-a^g)/(b^g-a^g), g=1-2r",
        lambda x, a, b, r: 0 < a <= x <= b and a < b),
    "gbm-hit-b-before-0": ClosedForm(
        _gbm_hit_b_before_0, ("x", "b", "r"), "GBM P_x[tau_b<tau_0]=(x/b)^g, g=1-2r",
        lambda x, b, r: 0 < x <= b),
    "gbm-mean-hit": ClosedForm(
        _gbm_mean_hit, ("x", "b", "r"), "GBM E_x[tau_b]=log(b/x)/(r-1/2)",
        lambda x, b, r: 0 < x <= b and r > 0.5),
    "drifted-bm-laplace": ClosedForm(
        _drifted_bm_laplace, ("a", "b", "lam"),
        "drifted BM B_t-bt hitting a: E[e^{-lam tau};tau<inf]=e^{-a(b+sqrt(b^2+2lam))}",
        lambda a, b, lam: a > 0 and b >= 0 and lam >= 0),
    "ou-exit": ClosedForm(
        _ou_exit, ("x", "a", "b", "sigma"), "OU P_x[tau_a<tau_b]=int_x^b e^{y^2/s^2}dy / int_a^b e^{y^2/s^2}dy",
        lambda x, a, b, sigma: a <= x <= b and a < b and sigma > 0),
    "max-law": ClosedForm(
        _max_law, ("L", "t"), "reflection principle P[sup_{s<=t}B_s>=L]=2P[B_t>=L]",
        lambda L, t: L >= 0 and t > 0),
}


def closed_form(tag: str, **params) -> float:
    """Evaluate catalog entry ``tag`` with keyword parameters."""
    if tag not in CATALOG:
        raise InvalidArgument(f"unknown closed form {tag!r}")
    entry = CATALOG[tag]
    if set(params) != set(entry.params):
        raise InvalidArgument(f"{tag} takes parameters {entry.params}, got {sorted(params)}")
    values = {k: float(params[k]) for k in entry.params}
    if not all(math.isfinite(v) for v in values.values()) or not entry.check(**values):
        raise InvalidArgument(f"invalid parameters for {tag}: {values}")
    if "n" in values:
        values["n"] = int(values["n"])
    return float(entry.fn(**values))


def source(tag: str) -> str:
    if tag not in CATALOG:
        raise InvalidArgument(f"unknown closed form {tag!r}")
    return CATALOG[tag].source
