import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import assert_same, on_both_backends
from stoklab.errors import InvalidArgument
from stoklab.kernels import rng
from stoklab.simcore import (
    McEstimate,
    Path,
    RandomStream,
    derive_stream,
    ks_critical_value,
    ks_statistic,
    ks_two_sample,
    mc_estimate,
    sample_gaussian,
    variance_estimate,
)

# Random123 known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    (
        (0xFFFFFFFF,) * 4,
        (0xFFFFFFFF, 0xFFFFFFFF),
        (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD),
    ),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
]


@pytest.mark.parametrize("counter,key,expected", KAT)
def test_philox_known_answers(counter, key, expected):
    assert rng.philox4x32(counter, key) == expected


def test_same_seed_same_draws():
    a = derive_stream(7, 3).gaussians(100)
    b = derive_stream(7, 3).gaussians(100)
    assert_same(a, b)


def test_different_streams_differ():
    a = derive_stream(7, 3).uniforms(100)
    b = derive_stream(7, 4).uniforms(100)
    c = derive_stream(8, 3).uniforms(100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniforms_open_interval_and_moments():
    u = derive_stream(1, 0).uniforms(200_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)


def test_gaussian_law():
    z = derive_stream(1, 1).gaussians(100_000)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 4 / math.sqrt(z.size)


def test_ppf_matches_scipy():
    u = np.concatenate([np.linspace(1e-15, 1 - 1e-15, 10_001), [1e-300, 1 - 2**-53]])
    np.testing.assert_allclose(rng.ppf(u), stats.norm.ppf(u), rtol=1e-13, atol=1e-13)


def test_sequential_single_draws_match_block():
    s1, s2 = derive_stream(5, 9), derive_stream(5, 9)
    block = s1.gaussians(2500)
    singles = np.array([s2.gaussian() for _ in range(2500)])
    assert_same(block, singles)
    assert s1.counter == s2.counter == 2500


def test_mixed_scalar_and_block_draws_share_counter():
    s = derive_stream(5, 9)
    first = s.uniform()
    rest = s.uniforms(4)
    np.testing.assert_array_equal(np.r_[first, rest], derive_stream(5, 9).uniforms(5))


def test_batch_row_equals_substream():
    grid = rng.gaussian_grid(11, 100, 8, 0, 50)
    for p in range(8):
        assert_same(grid[p], derive_stream(11, 100).substream(p).gaussians(50))


def test_counter_offset_resumes():
    s = derive_stream(3, 0)
    s.gaussians(17)
    tail = s.gaussians(10)
    assert_same(tail, derive_stream(3, 0).gaussians(27)[17:])
    assert_same(tail, RandomStream(3, 0, counter=17).gaussians(10))


def test_backends_identical_draws():
    a, b = on_both_backends(lambda: rng.gaussian_grid(2**40 + 3, 2**33, 5, 12345, 777))
    assert_same(a, b)
    a, b = on_both_backends(lambda: rng.uniform_grid(1, 0, 3, 1, 100))
    assert_same(a, b)


def test_sample_gaussian_advances_stream():
    s = derive_stream(1, 2)
    z = sample_gaussian(s)
    assert z == derive_stream(1, 2).gaussians(1)[0]
    assert s.counter == 1


def test_path_validation():
    with pytest.raises(InvalidArgument):
        Path(np.array([0.0, 0.0]), np.zeros(2))
    with pytest.raises(InvalidArgument):
        Path(np.array([0.0, 1.0]), np.zeros(3))
    p = Path.on_integers(np.arange(4.0))
    assert len(p) == 4 and p.final == 3.0


def test_mc_estimate_matches_numpy():
    x = derive_stream(2, 0).gaussians(1000)
    est = McEstimate.from_samples(x)
    assert est.mean == pytest.approx(x.mean())
    assert est.stderr == pytest.approx(x.std(ddof=1) / math.sqrt(1000))
    assert est.contains(est.mean + 3.9 * est.stderr)
    assert not est.contains(est.mean + 4.1 * est.stderr)


def test_mc_estimate_with_sampler():
    est = mc_estimate(lambda s: s.uniform(), 20_000, derive_stream(4, 0))
    assert est.contains(0.5)


def test_mc_estimate_rejects_tiny_n():
    with pytest.raises(InvalidArgument):
        McEstimate.from_samples([1.0])


def test_variance_estimate():
    x = derive_stream(6, 0).gaussians(50_000) * 2.0
    v = variance_estimate(x)
    assert v.contains(4.0)
    assert v.mean == pytest.approx(np.var(x, ddof=1))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60))
def test_ks_statistic_matches_scipy(xs):
    ours = ks_statistic(xs, stats.norm.cdf)
    ref = stats.kstest(xs, "norm").statistic
    assert ours == pytest.approx(ref, abs=1e-12)
    assert 0.0 <= ours <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_two_sample_ks_matches_scipy(a, b):
    assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


def test_ks_critical_value():
    assert ks_critical_value(10_000) == pytest.approx(0.0163)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**40), st.integers(0, 10_000))
def test_uniform_in_unit_interval(seed, stream_id, start):
    u = RandomStream(seed, stream_id, start).uniforms(8)
    assert np.all((u > 0) & (u < 1))
