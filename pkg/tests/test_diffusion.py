import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import assert_same, on_both_backends
from stoklab import sde
from stoklab.diffusion import (
    BvpProblem,
    DensityGrid,
    adaptive_simpson,
    apply_adjoint,
    apply_generator,
    arcsine_cdf,
    arcsine_occupation,
    closed_form,
    ehrenfest_limit_moments,
    evolve_density,
    laplace_bvp,
    mc_ball_exit,
    mc_exit_statistics,
    solve_exit_bvp,
    solve_sequence,
)
from stoklab.errors import InvalidArgument, PecletError
from stoklab.kernels import exit as exit_kern
from stoklab.kernels.thomas import solve_tridiagonal

BM = sde.brownian_spec()
OU = sde.ou_spec(1.0, 1.0)


def _within(est, oracle, bias):
    return abs(est.mean - oracle) <= 4 * est.stderr + bias


# -- generator and adjoint -----------------------------------------------------------------


def test_generator_examples():
    xs = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(apply_generator(BM, lambda x: x * x, xs), 1.0, atol=1e-5)
    np.testing.assert_allclose(apply_generator(BM, lambda x: 0 * x + 4.0, xs), 0.0, atol=1e-12)
    np.testing.assert_allclose(apply_generator(OU, lambda x: x, xs), -xs, atol=1e-5)
    exact = apply_generator(OU, (np.sin, np.cos, lambda x: -np.sin(x)), xs)
    np.testing.assert_allclose(exact, -xs * np.cos(xs) - 0.5 * np.sin(xs), rtol=1e-14)


def _gauss(var):
    c = 1 / math.sqrt(2 * math.pi * var)
    return (
        lambda x: c * np.exp(-x * x / (2 * var)),
        lambda x: -x / var * c * np.exp(-x * x / (2 * var)),
        lambda x: (x * x / var**2 - 1 / var) * c * np.exp(-x * x / (2 * var)),
    )


def test_adjoint_ou_stationary():
    rho = (
        lambda x: np.exp(-x * x) / math.sqrt(math.pi),
        lambda x: -2 * x * np.exp(-x * x) / math.sqrt(math.pi),
        lambda x: (4 * x * x - 2) * np.exp(-x * x) / math.sqrt(math.pi),
    )
    xs = np.linspace(-4, 4, 81)
    assert np.max(np.abs(apply_adjoint(OU, rho, xs))) < 1e-6
    assert np.max(np.abs(apply_adjoint(OU, lambda x: 0 * x, xs))) == 0.0


def test_adjoint_heat_kernel():
    xs = np.linspace(-4, 4, 81)
    t = 1.0
    dens = _gauss(t)
    # d/dt of the N(0, t) density
    dt_rho = dens[0](xs) * (xs * xs / (2 * t * t) - 1 / (2 * t))
    np.testing.assert_allclose(apply_adjoint(BM, dens, xs), dt_rho, atol=1e-6)


def test_adjointness_on_grid():
    x = np.linspace(-6, 6, 4001)
    h = x[1] - x[0]
    phi = lambda z: np.exp(-2 * (z - 0.5) ** 2)  # noqa: E731
    psi = lambda z: np.exp(-(z + 0.3) ** 2)  # noqa: E731
    spec = sde.gbm_spec(0.3, 0.5)
    lhs = integrate.trapezoid(apply_generator(spec, phi, x) * psi(x), dx=h)
    rhs = integrate.trapezoid(phi(x) * apply_adjoint(spec, psi, x), dx=h)
    assert abs(lhs - rhs) < 1e-5


# -- BVP -------------------------------------------------------------------------------------


def test_bvp_examples():
    p = solve_exit_bvp(BvpProblem(BM, -1, 2, 1.0, 0.0, n=2048))
    assert abs(p(0.0) - 2 / 3) < 1e-4
    m = solve_exit_bvp(BvpProblem(BM, -1, 2, 0.0, 0.0, theta=-1.0, n=2048))
    assert abs(m(0.0) - 2.0) < 1e-3
    lap = laplace_bvp(BM, -1, 1, 0.5, n=2048)
    assert abs(lap(0.0) - 1 / math.cosh(1.0)) < 1e-4


def test_bvp_sequence_matches_catalog():
    seq = solve_sequence(BM, -1.0, 1.0, 2048)
    assert abs(seq["mean_tau_sq"](0.0) - closed_form("symmetric-tau-sq", x=0, a=1)) < 1e-3
    assert abs(seq["tau_hit_b"](0.0) - closed_form("tau-on-hit-a", x=0, a=1)) < 1e-3
    assert abs(seq["tau_hit_b"](0.3) - closed_form("tau-on-hit-a", x=0.3, a=1)) < 1e-3


def test_bvp_second_order():
    errs = []
    for n in (32, 64, 128, 256):
        u = laplace_bvp(BM, -1, 1, 2.0, n=n)
        errs.append(abs(u(0.0) - closed_form("symmetric-laplace", x=0, a=1, lam=2.0)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 4) < 0.3)


def test_bvp_ou_exit_matches_quadrature():
    for sigma in (1.0, 0.6):
        u = solve_exit_bvp(BvpProblem(sde.ou_spec(sigma, 1.0), -1, 1.5, 1.0, 0.0, n=4096))
        for x in (-0.5, 0.0, 0.7):
            assert abs(u(x) - closed_form("ou-exit", x=x, a=-1, b=1.5, sigma=sigma)) < 1e-4


def test_bvp_gbm_matches_catalog():
    spec = sde.gbm_spec(0.25, 1.0)
    u = solve_exit_bvp(BvpProblem(spec, 0.5, 4.0, 0.0, 1.0, n=4096))
    assert abs(u(1.0) - closed_form("gbm-hit-b-before-a", x=1, a=0.5, b=4, r=0.25)) < 1e-4


def test_bvp_peclet_guard():
    spec = sde.drifted_bm_spec(200.0, 1.0)
    with pytest.raises(PecletError) as info:
        solve_exit_bvp(BvpProblem(spec, 0, 1, 0, 1, n=64))
    need = info.value.required_n
    assert need >= 200
    u = solve_exit_bvp(BvpProblem(spec, 0, 1, 0, 1, n=need))
    assert 0.0 <= u(0.5) <= 1.0


def test_bvp_validation():
    with pytest.raises(InvalidArgument):
        BvpProblem(BM, 1, 0, 0, 0)
    with pytest.raises(InvalidArgument):
        BvpProblem(BM, 0, 1, 0, 0, n=8)
    with pytest.raises(InvalidArgument):
        solve_exit_bvp(BvpProblem(BM, 0, 1, 0, 0, q=-1.0))


def test_thomas_vs_dense():
    rng = np.random.default_rng(0)
    n = 50
    lo, up = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    d = 4 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    A = np.diag(d) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)
    a, b = on_both_backends(lambda: solve_tridiagonal(lo, d, up, rhs))
    np.testing.assert_allclose(a, np.linalg.solve(A, rhs), rtol=1e-12)
    assert_same(a, b)


# -- closed forms ------------------------------------------------------------------------------


def test_catalog_examples():
    assert closed_form("gbm-hit-b-before-0", x=1, b=4, r=0.25) == pytest.approx(0.5, rel=1e-15)
    assert closed_form("gbm-mean-hit", x=1, b=4, r=1.0) == pytest.approx(2 * math.log(4), rel=1e-15)
    assert closed_form("ou-exit", x=0, a=-1, b=1, sigma=1) == pytest.approx(0.5, abs=1e-12)
    assert closed_form("annulus-hit-inner", r=2, R=1, outer=16, n=3) == pytest.approx(7 / 15, rel=1e-14)
    assert closed_form("transience", r=2, R=1, n=3) == 0.5
    assert closed_form("max-law", L=1, t=1) == pytest.approx(0.31731, abs=1e-5)


def test_drifted_bm_general_formula_at_zero():
    # the general Laplace formula gives exp(-2ab) at lam = 0
    assert closed_form("drifted-bm-laplace", a=1.5, b=0.4, lam=0.0) == pytest.approx(math.exp(-2 * 1.5 * 0.4))


def test_catalog_rejects():
    with pytest.raises(InvalidArgument):
        closed_form("nope", x=0)
    with pytest.raises(InvalidArgument):
        closed_form("interval-hit-a", x=3, a=-1, b=2)
    with pytest.raises(InvalidArgument):
        closed_form("interval-hit-a", x=0, a=-1)
    with pytest.raises(InvalidArgument):
        closed_form("gbm-mean-hit", x=1, b=4, r=0.25)


def test_ou_exit_quadrature_accuracy():
    x, a, b, s = 0.2, -1.0, 1.3, 0.4
    num = integrate.quad(lambda y: math.exp((y * y - b * b) / s**2), x, b, epsabs=0, epsrel=1e-13)[0]
    den = integrate.quad(lambda y: math.exp((y * y - b * b) / s**2), a, b, epsabs=0, epsrel=1e-13, points=[0.0])[0]
    assert closed_form("ou-exit", x=x, a=a, b=b, sigma=s) == pytest.approx(num / den, rel=1e-9)


def test_adaptive_simpson():
    assert adaptive_simpson(math.exp, 0, 1) == pytest.approx(math.e - 1, rel=1e-10)
    assert adaptive_simpson(lambda y: math.exp(-1e4 * (y - 0.3) ** 2), 0, 1) == pytest.approx(
        math.sqrt(math.pi / 1e4), rel=1e-9
    )


def test_ou_small_sigma_asymptotics_demo():
    # qualitative: P[hit a first] decays like exp(-(b^2 - a^2)/sigma^2) when b is the nearer end
    vals = [closed_form("ou-exit", x=0, a=-1.5, b=1.0, sigma=s) for s in (0.5, 0.4, 0.3)]
    assert vals[0] > vals[1] > vals[2] > 0


# -- exit Monte Carlo ---------------------------------------------------------------------------


def test_mc_interval_exit(stream):
    r = mc_exit_statistics(BM, 0.0, -1.0, 2.0, 1e-3, 20_000, stream())
    assert r.n_not_exited == 0
    assert _within(r.p_hit_a, 2 / 3, r.bias["p_a"])
    assert _within(r.mean_tau, 2.0, r.bias["mean_tau"])
    assert r.p_hit_a.mean + r.p_hit_b.mean == 1.0


def test_mc_symmetric_moments(stream):
    r = mc_exit_statistics(BM, 0.0, -1.0, 1.0, 1e-3, 20_000, stream(), lambdas=(0.5,))
    assert _within(r.mean_tau_sq, 5 / 3, r.bias["mean_tau_sq"])
    assert _within(r.laplace[0.5], 1 / math.cosh(1.0), r.bias["laplace_0.5"])
    assert _within(r.tau_hit_b, 0.5, r.bias["tau_hit_b"])
    assert _within(r.tau_hit_a, 0.5, r.bias["tau_hit_a"])
    assert r.tau_given_hit_b().contains(1.0, extra=2 * r.bias["tau_hit_b"] + 0.02)


def test_mc_exit_validation(stream):
    with pytest.raises(InvalidArgument):
        mc_exit_statistics(BM, 3.0, -1.0, 2.0, 1e-3, 10, stream())
    with pytest.raises(InvalidArgument):
        mc_exit_statistics(BM, 0.0, -1.0, 2.0, 0.0, 10, stream())


def test_drifted_bm_horizon(stream):
    a, b = 1.0, 0.5
    spec = sde.drifted_bm_spec(-b, 1.0)
    probs = []
    for horizon in (1.0, 4.0, 16.0):
        r = mc_exit_statistics(spec, 0.0, -math.inf, a, 1e-3, 5000, stream(), t_max=horizon)
        probs.append(r.p_hit_b)
    means = [p.mean for p in probs]
    assert means == sorted(means)
    limit = closed_form("drifted-bm-laplace", a=a, b=b, lam=0.0)
    assert all(p.mean <= limit + 4 * p.stderr for p in probs)


def test_exit_kernel_backends():
    a, b = on_both_backends(
        lambda: exit_kern.exit_1d(OU.drift, OU.diffusion, 0.1, -1.0, 1.0, 1e-3, 10**6, 5, 9, 200)
    )
    assert_same(a, b)


def test_ball_exit(stream):
    r = mc_ball_exit(stream(), 3, 1.0, np.zeros(3), 1e-4, 5000)
    assert r.n_not_exited == 0
    assert _within(r.mean_tau, 1 / 3, r.bias["mean_tau"])
    assert r.p_inner_first is None


def test_annulus(stream):
    r = mc_ball_exit(stream(), 3, 1.0, [2.0, 0, 0], 1e-4, 2000, outer_R=16.0)
    assert _within(r.p_inner_first, 7 / 15, r.bias["p_inner_first"])


def test_ball_validation(stream):
    with pytest.raises(InvalidArgument):
        mc_ball_exit(stream(), 3, 1.0, [2.0, 0, 0], 1e-3, 10)
    with pytest.raises(InvalidArgument):
        mc_ball_exit(stream(), 3, 1.0, [0.5, 0, 0], 1e-3, 10, outer_R=4.0)
    with pytest.raises(InvalidArgument):
        mc_ball_exit(stream(), 3, 1.0, [0.5, 0], 1e-3, 10)


def test_ball_kernel_backends():
    x0 = np.array([2.0, 0.0, 0.0])
    a, b = on_both_backends(lambda: exit_kern.ball_exit(x0, 1.0, 8.0, True, 1e-3, math.inf, 0.15, 10**8, 3, 4, 50))
    assert_same(a, b)


# -- occupation time ----------------------------------------------------------------------------


def test_arcsine(stream):
    frac = arcsine_occupation(stream(), 1.0, 1e-3, 5000)
    assert stats.kstest(frac, arcsine_cdf).statistic < 0.03
    below = np.mean(frac < 0.5)
    assert abs(below - 0.5) <= 4 * math.sqrt(0.25 / frac.size)
    f4 = arcsine_occupation(stream(1), 4.0, 4e-3, 5000)
    assert stats.ks_2samp(frac, f4).pvalue > 0.01


def test_arcsine_validation(stream):
    with pytest.raises(InvalidArgument):
        arcsine_occupation(stream(), 1.0, 1e-2, 10)


def test_positive_fraction_backends():
    a, b = on_both_backends(lambda: exit_kern.positive_fraction(1, 2, 300, 1000, 1e-3))
    assert_same(a, b)


# -- Fokker-Planck -------------------------------------------------------------------------------


def test_heat_kernel_evolution():
    rho0 = DensityGrid.from_function(_gauss(0.01)[0], -8, 8, 2048)
    out = evolve_density(BM, rho0, 1e-3, 1.0)
    assert out.l2_distance(_gauss(1.01)[0]) < 1e-3
    assert out.warning is None and out.mass_drift < 1e-3
    assert out.t == pytest.approx(1.0)


def test_ou_stationary_density():
    rho0 = DensityGrid.from_function(lambda x: np.exp(-x * x) / math.sqrt(math.pi), -6, 6, 2048)
    out = evolve_density(OU, rho0, 1e-3, 1.0)
    assert np.max(np.abs(out.values - rho0.values)) < 1e-3


def test_zero_coefficients_leave_density():
    spec = sde.drifted_bm_spec(0.0, 0.0)
    rho0 = DensityGrid.from_function(_gauss(0.5)[0], -10, 10, 400)
    out = evolve_density(spec, rho0, 0.01, 1.0)
    np.testing.assert_allclose(out.values[1:-1], rho0.values[1:-1], rtol=1e-14)


def test_semigroup():
    rho0 = DensityGrid.from_function(_gauss(0.2)[0], -8, 8, 1024)
    spec = sde.ou_spec(0.8, 0.5)
    twice = evolve_density(spec, evolve_density(spec, rho0, 1e-2, 0.5), 1e-2, 0.5)
    once = evolve_density(spec, rho0, 1e-2, 1.0)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


def test_density_warnings():
    rho0 = DensityGrid.from_function(_gauss(0.5)[0], -2, 2, 200)
    out = evolve_density(BM, rho0, 1e-2, 1.0)
    assert out.warning is not None and "boundary" in out.warning


def test_density_validation():
    x = np.linspace(0, 1, 11)
    with pytest.raises(InvalidArgument):
        DensityGrid(x, -np.ones(11))
    with pytest.raises(InvalidArgument):
        DensityGrid(x**2, np.ones(11))
    with pytest.raises(InvalidArgument):
        evolve_density(BM, DensityGrid(x, np.ones(11)), 0.3, 1.0)


# -- Ehrenfest limit -------------------------------------------------------------------------------


def test_ehrenfest_limit_moments():
    x, drift, var = ehrenfest_limit_moments(400)
    inside = np.abs(x) <= 1
    assert np.all(np.abs(drift[inside] - (-2 * x[inside])) <= 0.05 * np.maximum(np.abs(2 * x[inside]), 1e-12) + 1e-12)
    assert np.all(np.abs(var[inside] - 1) <= 0.05)
