import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_same, on_both_backends
from stoklab import discrete, martingale
from stoklab.discrete import FiniteChain, polya_state
from stoklab.errors import InvalidArgument
from stoklab.kernels.martingale import upcrossings_rows
from stoklab.martingale import FirstEntry, FixedTime, MaxRule, MinRule
from stoklab.simcore import McEstimate, Path


def _walks(stream, n_steps, n_paths):
    return discrete.random_walk_batch(stream, n_steps, n_paths).astype(np.float64)


# -- transforms ---------------------------------------------------------------------------


def test_unit_stakes_telescope(stream):
    x = Path.on_integers(_walks(stream(), 50, 1)[0] + 3.0)
    y = martingale.predictable_transform(Path(x.times, np.ones(51)), x)
    np.testing.assert_allclose(y.values, x.values - x.values[0])


def test_transform_grid_mismatch():
    x = Path.on_integers(np.zeros(4))
    h = Path(np.arange(4.0) * 2, np.ones(4))
    with pytest.raises(InvalidArgument):
        martingale.predictable_transform(h, x)


@pytest.mark.parametrize("n", range(0, 21))
def test_doubling_law_exact(n):
    law = martingale.doubling_strategy_law(n)
    if n == 0:
        assert law == {Fraction(0): Fraction(1)}
    else:
        assert law == {Fraction(1 - 2**n): Fraction(1, 2**n), Fraction(1): 1 - Fraction(1, 2**n)}


def test_doubling_simulation_matches_law(stream):
    walks = _walks(stream(), 6, 100_000).T
    x = Path.on_integers(walks)
    y = martingale.predictable_transform(martingale.doubling_stakes(x), x).values[-1]
    assert set(np.unique(y)) == {1.0, 1.0 - 64}
    assert McEstimate.from_samples(y == -63.0).contains(1 / 64)


def test_bounded_predictable_transform_has_mean_zero(stream):
    walks = _walks(stream(), 40, 50_000).T
    x = Path.on_integers(walks)
    # stake depends on the sign of the previous position only
    h = np.zeros_like(walks)
    h[1:] = np.where(walks[:-1] > 0, 2.0, -1.0)
    y = martingale.predictable_transform(Path(x.times, h), x).values[-1]
    assert McEstimate.from_samples(y).contains(0.0)


# -- Doob decomposition and bracket ---------------------------------------------------------


def test_ehrenfest_compensator(stream):
    n = 12
    chain = FiniteChain.ehrenfest(n)
    path = discrete.simulate_ehrenfest(stream(), n, 300, 6)
    dec = martingale.doob_decomposition_chain(chain, None, path)
    inc = np.diff(dec.predictable_part.values)
    np.testing.assert_allclose(inc, 1 - 2 * path.values[:-1] / n, atol=1e-12)
    assert dec.predictable_part.values[0] == 0.0
    np.testing.assert_allclose(dec.martingale_part.values + dec.predictable_part.values, path.values, atol=1e-12)


def test_constant_f_gives_zero_compensator(stream):
    chain = FiniteChain.ehrenfest(5)
    path = discrete.simulate_ehrenfest(stream(), 5, 50, 2)
    dec = martingale.doob_decomposition_chain(chain, lambda i: 7.0, path)
    assert np.max(np.abs(dec.predictable_part.values)) < 1e-12
    assert np.max(np.abs(dec.martingale_part.values - 7.0)) < 1e-12


def test_martingale_chain_has_zero_compensator():
    # interior of the symmetric walk satisfies sum_j (j - i) p_ij = 0
    chain = FiniteChain.symmetric_walk(5)
    inc = martingale.compensator_increments(chain, None)
    assert np.all(np.abs(inc[1:-1]) < 1e-15)


def test_martingale_part_exact_property():
    chain = FiniteChain.ehrenfest(9)
    f = np.cos(np.arange(10.0))
    inc = martingale.compensator_increments(chain, f)
    resid = chain.transition @ f - inc - f
    assert np.max(np.abs(resid)) < 1e-10


def test_decomposition_rejects_impossible_path():
    chain = FiniteChain.ehrenfest(4)
    with pytest.raises(InvalidArgument):
        martingale.doob_decomposition_chain(chain, None, Path.on_integers(np.array([0, 2])))


def test_submartingale_compensator_nondecreasing(stream):
    # wide enough that the reflecting walls (where x^2 is not a submartingale) are never reached
    chain = FiniteChain.symmetric_walk(250)
    f = chain.labels**2
    path = discrete.simulate_chain(stream(), chain, 250, 200)
    dec = martingale.doob_decomposition_chain(chain, f, path)
    assert np.all(np.diff(dec.predictable_part.values) >= 0)


def test_walk_bracket_is_time(stream):
    chain = FiniteChain.symmetric_walk(50)
    path = discrete.simulate_chain(stream(), chain, 50, 30)
    br = martingale.bracket_process_chain(chain, None, path)
    np.testing.assert_allclose(br.values, np.arange(31.0))


def test_polya_bracket_increment():
    r0, v0, c, h = 2, 1, 3, 6
    chain = FiniteChain.polya(r0, v0, c, h)
    states = [polya_state(0, 0)]
    for m, red in zip(range(1, h + 1), [1, 0, 0, 1, 1, 0]):
        k = (states[-1] - (m - 1) * m // 2) + red
        states.append(polya_state(m, k))
    path = Path.on_integers(np.array(states))
    br = martingale.bracket_process_chain(chain, None, path)
    x = chain.labels[states]
    totals = r0 + v0 + c * np.arange(1, h + 1)
    expected = c**2 * x[:-1] * (1 - x[:-1]) / totals**2
    np.testing.assert_allclose(np.diff(br.values), expected, atol=1e-15)


def test_constant_bracket_zero(stream):
    chain = FiniteChain.ehrenfest(4)
    path = discrete.simulate_ehrenfest(stream(), 4, 20, 2)
    assert np.all(martingale.bracket_process_chain(chain, lambda i: 1.0, path).values == 0)


# -- upcrossings ------------------------------------------------------------------------------


def test_upcrossings_hand_example():
    assert martingale.upcrossings([0, 3, 1, 4, 0, 5], 0.5, 2.5) == 2


def test_upcrossings_invalid_band():
    with pytest.raises(InvalidArgument):
        martingale.upcrossings([0, 1], 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50).map(sorted))
def test_monotone_path_at_most_one(values):
    assert martingale.upcrossings(values, -1.0, 1.0) <= 1


def _upcross_reference(v, a, b):
    count, seeking_low = 0, True
    for x in v:
        if seeking_low and x <= a:
            seeking_low = False
        elif not seeking_low and x >= b:
            count += 1
            seeking_low = True
    return count


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=60), st.integers(-3, 2))
def test_upcrossings_match_reference(values, a):
    assert martingale.upcrossings(values, a, a + 1.5) == _upcross_reference(values, a, a + 1.5)


def test_upcrossings_backends_agree(stream):
    walks = _walks(stream(), 300, 64)
    a, b = on_both_backends(lambda: upcrossings_rows(walks, -2.0, 2.0))
    assert_same(a, b)


def test_upcrossing_bound(stream):
    walks = np.abs(_walks(stream(), 400, 20_000))
    a, b = 2.0, 6.0
    lhs = McEstimate.from_samples((b - a) * martingale.upcrossings_batch(walks, a, b))
    rhs = McEstimate.from_samples(np.maximum(walks[:, -1] - a, 0) - np.maximum(walks[:, 0] - a, 0))
    assert lhs.mean <= rhs.mean + 4 * math.hypot(lhs.stderr, rhs.stderr)


# -- stopping -------------------------------------------------------------------------------------


def test_first_entry_at_zero():
    assert martingale.stopping_time(FirstEntry({0}), [0, 1, 0]) == 0


def test_min_rule_bounded():
    rule = MinRule(FirstEntry({10}), FixedTime(5))
    assert martingale.stopping_time(rule, np.arange(20)) == 5
    assert martingale.stopping_time(rule, np.arange(3)) is None


def test_max_rule():
    rule = MaxRule(FirstEntry(lambda v: v > 2), FixedTime(1))
    assert martingale.stopping_time(rule, [0, 5, 1, 3]) == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=40), st.integers(0, 30))
def test_rules_do_not_anticipate(values, n):
    rule = MinRule(FirstEntry({2, -2}), FixedTime(n))
    full = martingale.stopping_time(rule, values)
    for k in range(len(values)):
        prefix_time = martingale.stopping_time(rule, values[: k + 1])
        fired_by_k = full is not None and full <= k
        assert (prefix_time is not None) == fired_by_k
        if fired_by_k:
            assert prefix_time == full


def test_stopped_walk_at_zero(stream):
    walks = _walks(stream(), 2000, 500) + 1.0
    rule = FirstEntry({0.0})
    finals = []
    for w in walks:
        path = Path.on_integers(w)
        n = martingale.stopping_time(rule, w)
        stopped = martingale.stopped_path(path, n).values
        assert np.all(stopped >= 0)
        if n is not None:
            assert stopped[-1] == 0.0
        finals.append(stopped[-1])
    assert McEstimate.from_samples(finals).contains(1.0)


def test_optional_stopping_bounded(stream):
    walks = _walks(stream(), 200, 20_000)
    rule = MinRule(FirstEntry({-5.0, 5.0}), FixedTime(200))
    stopped = [w[martingale.stopping_time(rule, w)] for w in walks]
    assert McEstimate.from_samples(stopped).contains(0.0)


# -- maximal inequalities ----------------------------------------------------------------------------


def test_doob_inequality(stream):
    audit = martingale.maximal_inequality_audit(
        martingale.walk_chunks(stream(), 20_000, 500, chunk=5000, transform=np.abs), 30.0
    )
    assert audit.holds()
    assert audit.margin > 0


def test_kolmogorov_inequality(stream):
    audit = martingale.maximal_inequality_audit(
        martingale.walk_chunks(stream(), 20_000, 500, chunk=5000, transform=np.square), 30.0**2
    )
    assert audit.holds()
    assert audit.rhs.contains(500 / 900)


def test_l2_maximal_inequality(stream):
    audit = martingale.maximal_inequality_audit(np.abs(_walks(stream(), 500, 20_000)), None, p=2.0)
    assert audit.holds()


def test_audit_lhs_vanishes_for_large_lambda(stream):
    audit = martingale.maximal_inequality_audit(np.abs(_walks(stream(), 100, 1000)), 1e6)
    assert audit.lhs.mean == 0.0


def test_audit_from_summary_matches_paths(stream):
    x = np.abs(_walks(stream(), 100, 500))
    a = martingale.maximal_inequality_audit(x, 8.0)
    b = martingale.audit_from_summary(x.max(axis=1), x[:, -1], 8.0)
    assert a == b


def test_audit_arguments():
    with pytest.raises(InvalidArgument):
        martingale.audit_from_summary(np.ones(3), np.ones(3), 0.0)
    with pytest.raises(InvalidArgument):
        martingale.audit_from_summary(np.ones(3), np.ones(3), None, p=1.0)
