import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoklab import ito
from stoklab.brownian import bm_batch, sample_bm_increments, uniform_grid
from stoklab.errors import InvalidArgument
from stoklab.simcore import McEstimate, derive_stream


def _paths(stream, T=1.0, n=256, n_paths=2000, k=0):
    return bm_batch(stream(k), uniform_grid(T, n), n_paths)


# -- simple integrands -------------------------------------------------------------------


def test_simple_constant_one_is_bm(stream):
    bm = _paths(stream, n=64, n_paths=10)
    out = ito.ito_integral_simple(ito.SimpleIntegrand.constant(1.0), bm)
    np.testing.assert_allclose(out.values, bm.values, atol=1e-15)


def test_simple_linearity_in_constant(stream):
    bm = _paths(stream, n=64, n_paths=10)
    out = ito.ito_integral_simple(ito.SimpleIntegrand.constant(-2.5), bm)
    np.testing.assert_allclose(out.values, -2.5 * bm.values, atol=1e-14)


def test_simple_exact_at_partition_points(stream):
    bm = _paths(stream, n=8, n_paths=3)
    e = ito.SimpleIntegrand(np.array([0.0, 0.25, 1.0]), [2.0, lambda prefix: prefix[-1]])
    out = ito.ito_integral_simple(e, bm).values
    b = bm.values
    expected = 2.0 * b[2] + b[2] * (b[8] - b[2])
    np.testing.assert_allclose(out[-1], expected, rtol=1e-14)
    np.testing.assert_allclose(out[2], 2.0 * b[2], rtol=1e-14)


def test_simple_zero_mean(stream):
    bm = bm_batch(stream(), uniform_grid(1.0, 16), 100_000)
    e = ito.SimpleIntegrand(uniform_grid(1.0, 16), [lambda prefix: np.sign(prefix[-1])] * 16)
    est = McEstimate.from_samples(ito.ito_integral_simple(e, bm).values[-1])
    assert est.contains(0.0)


def test_simple_grid_mismatch(stream):
    bm = _paths(stream, n=4, n_paths=2)
    e = ito.SimpleIntegrand(np.array([0.0, 0.3, 1.0]), [1.0, 1.0])
    with pytest.raises(InvalidArgument):
        ito.ito_integral_simple(e, bm)


def test_simple_validation():
    with pytest.raises(InvalidArgument):
        ito.SimpleIntegrand(np.array([0.1, 1.0]), [1.0])
    with pytest.raises(InvalidArgument):
        ito.SimpleIntegrand(np.array([0.0, 0.5, 1.0]), [1.0])


def test_simple_integrand_sees_prefix_only(stream):
    bm = _paths(stream, n=16, n_paths=4)
    seen = []

    def spy(prefix):
        seen.append(prefix.shape[0])
        with pytest.raises(ValueError):
            prefix[0] = 1.0
        return 0.0

    part = uniform_grid(1.0, 4)
    ito.ito_integral_simple(ito.SimpleIntegrand(part, [spy] * 4), bm)
    assert seen == [1, 5, 9, 13]


# -- isometry ----------------------------------------------------------------------------


def test_isometry_dyadic_bm(stream):
    n = 8
    e = ito.SimpleIntegrand.dyadic_bm(n)
    assert e.rhs() == pytest.approx((2**n - 1) / 2 ** (n + 1), rel=1e-14)
    lhs, rhs = ito.isometry_audit(e, 100_000, stream())
    assert lhs.contains(rhs)


def test_isometry_trivial_cases(stream):
    lhs, rhs = ito.isometry_audit(ito.SimpleIntegrand.constant(1.0), 100_000, stream())
    assert rhs == 1.0 and lhs.contains(1.0)
    lhs, rhs = ito.isometry_audit(ito.SimpleIntegrand.constant(0.0), 100, stream())
    assert rhs == 0.0 and lhs.mean == 0.0


def test_isometry_sample_rhs_fallback(stream):
    part = uniform_grid(1.0, 4)
    e = ito.SimpleIntegrand(part, [lambda prefix: np.cos(prefix[-1])] * 4)
    assert e.rhs() is None
    lhs, rhs = ito.isometry_audit(e, 50_000, stream())
    assert lhs.contains(rhs, extra=0.01)


# -- left point and midpoint ----------------------------------------------------------------


def test_int_b_db_identity(stream):
    T, n = 1.0, 512
    bm = _paths(stream, T=T, n=n, n_paths=4000)
    got = ito.ito_integral_leftpoint(lambda t, p: p[-1], bm).values[-1]
    exact = 0.5 * bm.values[-1] ** 2 - 0.5 * T
    rms = math.sqrt(np.mean((got - exact) ** 2))
    assert rms <= 4 * math.sqrt(T * (T / n) / 2)
    # the derived error variance is also matched, not just bounded
    assert rms == pytest.approx(math.sqrt(T * (T / n) / 2), rel=0.1)


def test_deterministic_integrand_variance(stream):
    bm = bm_batch(stream(), uniform_grid(1.0, 200), 20_000)
    v = ito.ito_integral_leftpoint(lambda t, p: t, bm).values[-1]
    assert abs(v.var() - 1 / 3) < 0.02


def test_ou_variance_via_integral(stream):
    t = 2.0
    bm = bm_batch(stream(), uniform_grid(t, 400), 20_000)
    y = math.exp(-t) * ito.ito_integral_leftpoint(lambda s, p: math.exp(s), bm).values[-1]
    y2 = McEstimate.from_samples(y**2 - 0.0)
    # mean zero by the zero-mean property, so the second moment is the variance
    assert McEstimate.from_samples(y).contains(0.0)
    assert y2.contains(0.5 * (1 - math.exp(-2 * t)), extra=2e-3)


def test_stratonovich_of_b(stream):
    errs = []
    for n in (64, 1024):
        bm = bm_batch(stream(1), uniform_grid(1.0, n), 500)
        s = ito.stratonovich_integral_midpoint(lambda t, p: p[-1], bm).values[-1]
        errs.append(np.max(np.abs(s - 0.5 * bm.values[-1] ** 2)))
    # midpoint sums telescope exactly for f = B
    assert max(errs) < 1e-12


def test_stratonovich_correction(stream):
    g, dg = np.sin, np.cos
    bm = bm_batch(stream(), uniform_grid(1.0, 2048), 1000)
    x = bm.values
    strat = ito.stratonovich_integral_midpoint(g(x), bm).values[-1]
    itoi = ito.ito_integral_leftpoint(g(x), bm).values[-1]
    corr = 0.5 * ito.time_integral_leftpoint(dg(x) * 1.0, bm).values[-1]
    err = np.max(np.abs(strat - itoi - corr))
    assert err < 8 * math.sqrt(1 / 2048)


def test_stratonovich_deterministic_matches_ito(stream):
    bm = bm_batch(stream(), uniform_grid(1.0, 4096), 200)
    a = ito.stratonovich_integral_midpoint(lambda t, p: math.sin(3 * t), bm).values[-1]
    b = ito.ito_integral_leftpoint(lambda t, p: math.sin(3 * t), bm).values[-1]
    assert np.max(np.abs(a - b)) < 0.01


def test_integrand_array_shape(stream):
    bm = _paths(stream, n=4, n_paths=3)
    with pytest.raises(InvalidArgument):
        ito.ito_integral_leftpoint(np.zeros((5, 2)), bm)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 63))
def test_linearity_and_additivity(seed, a, b, u):
    bm = sample_bm_increments(derive_stream(seed, 9), uniform_grid(1.0, 64))
    x = bm.values
    f1, f2 = np.sin(x), x**2
    i1 = ito.ito_integral_leftpoint(f1, bm).values
    i2 = ito.ito_integral_leftpoint(f2, bm).values
    both = ito.ito_integral_leftpoint(a * f1 + b * f2, bm).values
    np.testing.assert_allclose(both, a * i1 + b * i2, atol=1e-12)
    # int_0^T = int_0^u + int_u^T on grid points
    tail = np.sum(f1[u:-1] * np.diff(x[u:]))
    assert i1[-1] == pytest.approx(i1[u] + tail, abs=1e-12)


# -- exponential martingale and Bernstein ----------------------------------------------------


def test_exponential_constant(stream):
    gamma = 0.8
    bm = bm_batch(stream(), uniform_grid(1.0, 50), 100_000)
    m = ito.exponential_supermartingale(gamma, bm)
    np.testing.assert_allclose(m.values, np.exp(gamma * bm.values - 0.5 * gamma**2 * bm.times[:, None]), rtol=1e-12)
    assert McEstimate.from_samples(m.values[-1]).contains(1.0)


def test_exponential_zero(stream):
    m = ito.exponential_supermartingale(0.0, _paths(stream, n=16, n_paths=5))
    assert np.all(m.values == 1.0)


def test_exponential_adapted_is_supermartingale(stream):
    bm = bm_batch(stream(), uniform_grid(1.0, 100), 50_000)
    m = ito.exponential_supermartingale(lambda t, p: np.tanh(p[-1]), bm)
    est = McEstimate.from_samples(m.values[-1])
    assert est.mean <= 1.0 + 4 * est.stderr


def test_bernstein(stream):
    lhs, rhs = ito.bernstein_audit(lambda s: 1 + s, 2.0, 1.0, 256, 50_000, stream())
    assert rhs == pytest.approx(math.exp(-4 / (2 * 7 / 3)), rel=0.02)
    assert lhs.mean <= rhs + 4 * lhs.stderr
