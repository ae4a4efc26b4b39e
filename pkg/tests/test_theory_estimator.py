import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import forked_process_samples
from rwres.errors import ConfigError
from rwres.theory import (EventHistory, TheoryParams, bennett_h, estimate_variance, expected_estimate,
                          fork_prob_bound, forked_mean, irwin_hall_cdf, pfork_plus, term_prob_bound)

P = TheoryParams(lambda_r=0.05, mu_h=0.02, z0=10, gamma=2.0, gamma_term=8.0)


def test_params_defaults_and_checks():
    assert P.p == pytest.approx(0.1)
    assert TheoryParams(0.1, 0.1, z0=4).fork_prob == 0.25
    for bad in [dict(lambda_r=0), dict(mu_h=-1), dict(z0=0), dict(fork_prob=1.5), dict(n=0)]:
        kw = dict(lambda_r=0.1, mu_h=0.1)
        kw.update(bad)
        with pytest.raises(ConfigError):
            TheoryParams(**kw)


def test_history_checks_and_roundtrip():
    h = EventHistory(5, terminations=[(3, 2)], forks=[(4, 1)], now=10)
    assert EventHistory.from_dict(h.to_dict()) == h
    with pytest.raises(ConfigError):
        EventHistory(5, forks=[(11, 1)], now=10)
    with pytest.raises(ConfigError):
        EventHistory(5, terminations=[(3, 0)], now=10)
    with pytest.raises(ConfigError):
        EventHistory(-1)


def test_steady_state_is_half_count():
    h = EventHistory(10, now=0.0)
    assert expected_estimate(h, P) == pytest.approx(5.0)
    assert estimate_variance(h, P) == pytest.approx(9 / 12)


def test_ancient_history_limit():
    h = EventHistory(6, terminations=[(-1e4, 3)], forks=[(-1e4, 2)], now=0.0)
    assert expected_estimate(h, P) == pytest.approx((6 + 2) / 2)
    assert estimate_variance(h, P) == pytest.approx((5 + 2) / 12)


def test_fresh_termination_counts_fully():
    h = EventHistory(7, terminations=[(0.0, 3)], now=0.0)
    assert expected_estimate(h, P) == pytest.approx(5.0)
    h2 = EventHistory(7, terminations=[(-20.0, 3)], now=0.0)
    assert expected_estimate(h2, P) == pytest.approx(3.5 + 1.5 * math.exp(-1))


def test_moments_against_simulated_history(rng):
    # visitor contributes 1/2 exactly; others are uniform, scaled uniform, or forked
    h = EventHistory(4, terminations=[(-30.0, 2)], forks=[(-50.0, 3)], now=0.0)
    n = 200_000
    total = np.full(n, 0.5) + rng.random((n, 3)).sum(1)
    total += math.exp(-P.lambda_r * 30) * rng.random((n, 2)).sum(1)
    for _ in range(3):
        total += forked_process_samples(0.0, -50.0, 0.0, P.lambda_r, P.mu_h, n, rng)
    assert expected_estimate(h, P) == pytest.approx(total.mean(), abs=4 * total.std() / math.sqrt(n))
    assert estimate_variance(h, P) == pytest.approx(total.var(), rel=0.02)


def test_variance_methods():
    h = EventHistory(4, forks=[(-50.0, 1)], now=50.0)
    assert estimate_variance(h, P, "printed") != estimate_variance(h, P, "integrated")
    with pytest.raises(ConfigError):
        estimate_variance(h, P, "bogus")
    with pytest.raises(ConfigError):
        expected_estimate(EventHistory(0), P)


def test_bennett_h():
    assert bennett_h(0.0) == 0.0
    assert bennett_h(1.0) == pytest.approx(2 * math.log(2) - 1)
    assert bennett_h(1e-4) == pytest.approx(0.5e-8, rel=1e-3)


def test_fork_bound_preconditions():
    # recent terminations keep the estimate high, so the bound is tiny
    high = EventHistory(2, terminations=[(-1.0, 8)], now=0.0)
    assert fork_prob_bound(high, P).precondition_ok and fork_prob_bound(high, P).value < 1e-5
    assert fork_prob_bound(EventHistory(3), P) == (P.p, False)


def test_fork_bound_formula():
    h = EventHistory(10)
    mean, var = 5.0, 0.75
    want = 0.1 * math.exp(-var * bennett_h((mean - 2) ** 2 / var))
    assert fork_prob_bound(h, P).value == pytest.approx(want)
    assert term_prob_bound(h, P).value == pytest.approx(0.1 * math.exp(-var * bennett_h(9 / var)))


def test_term_bound_needs_threshold():
    with pytest.raises(ConfigError):
        term_prob_bound(EventHistory(10), TheoryParams(0.05, 0.02))
    assert not term_prob_bound(EventHistory(20), P).precondition_ok


def test_fork_bound_decreases_with_walks():
    vals = [fork_prob_bound(EventHistory(k), P).value for k in range(6, 16)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_pfork_plus_simplified_form():
    q = TheoryParams(0.05, 0.02, z0=10, gamma=0.9)
    for i in range(1, 10):
        assert pfork_plus(i, q) == pytest.approx(i * 0.1 * 0.4 ** (i - 1) / math.factorial(i - 1))
    assert pfork_plus(10, P) == pytest.approx(10 * 0.1 * irwin_hall_cdf(9, 1.5))
    with pytest.raises(ConfigError):
        pfork_plus(0, P)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(0, 5), st.floats(0, 500), st.integers(0, 5), st.floats(0, 500))
def test_estimate_properties(a, k, ago_t, f, ago_f):
    h = EventHistory(a, terminations=[(-ago_t, k)] if k else [], forks=[(-ago_f, f)] if f else [])
    m = expected_estimate(h, P)
    assert 0.5 + (a - 1) / 2 - 1e-12 <= m <= 0.5 + (a - 1) / 2 + k / 2 + f * 1.0 + 1e-12
    assert estimate_variance(h, P) >= 0
    assert 0 <= fork_prob_bound(h, P).value <= P.p
    if f:
        assert forked_mean(0.0, -ago_f, 0.0, P.lambda_r, P.mu_h) <= 1.0
