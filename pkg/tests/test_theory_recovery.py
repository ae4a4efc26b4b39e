import math

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from oracles import fork_tree_mc, reaction_product
from rwres.errors import BoundNotReached, ConfigError
from rwres.theory import (TheoryParams, default_eps_grid, default_thresholds, design_thresholds,
                          growth_prob_bound, growth_time_bound, overshoot_approx, overshoot_exact,
                          pfork_plus, reaction_time_bound, reaction_time_chain)
from rwres.theory import recovery

TOY = TheoryParams(lambda_r=0.05, mu_h=0.02, z0=10, fork_prob=0.1, gamma=2.0)


def test_reaction_toy_frozen():
    b = reaction_time_bound(5, 0, 1, TOY, 0.5)
    assert b.steps == 17
    assert b.eps == pytest.approx(1.5 / 65)


def test_reaction_matches_oracle():
    grid = default_eps_grid(2.0)[::8]
    want = min(s for s in (reaction_product(5, 0, 1, 2.0, 0.1, 0.05, 0.5, e) for e in grid) if s is not None)
    assert reaction_time_bound(5, 0, 1, TOY, 0.5, eps_grid=grid).steps == want
    for k, r, z in [(3, 1, 4), (6, 2, 2)]:
        want = min(s for s in (reaction_product(k, r, z, 2.0, 0.1, 0.05, 0.1, e) for e in grid) if s is not None)
        assert reaction_time_bound(k, r, z, TOY, 0.1, eps_grid=grid).steps == want


def test_reaction_monotone():
    lams = [0.02, 0.05, 0.1, 0.2]
    steps = [reaction_time_bound(5, 0, 5, TheoryParams(l, 0.02, fork_prob=0.1), 0.05).steps for l in lams]
    assert all(a >= b for a, b in zip(steps, steps[1:]))
    deltas = [0.5, 0.1, 0.01, 0.001]
    steps = [reaction_time_bound(5, 0, 5, TOY, d).steps for d in deltas]
    assert all(a <= b for a, b in zip(steps, steps[1:]))


def test_reaction_unreachable():
    with pytest.raises(BoundNotReached):
        reaction_time_bound(5, 0, 5, TheoryParams(0.05, 0.02, fork_prob=0.0), 0.1)


def test_reaction_argument_checks():
    for args in [(0, 0, 1), (3, 3, 1), (3, 0, -1), (3, 0, 0)]:
        with pytest.raises(ConfigError):
            reaction_time_bound(*args, TOY, 0.1)
    with pytest.raises(ConfigError):
        reaction_time_bound(3, 0, 1, TOY, 0.1, eps_grid=[1.5])


def test_reaction_chain():
    total, parts = reaction_time_chain(5, 3, 5, TOY, 0.3)
    assert len(parts) == 3 and total == sum(p.steps for p in parts)
    assert parts[0].steps == reaction_time_bound(5, 0, 5, TOY, 0.1).steps


def test_visit_time_formula(monkeypatch):
    monkeypatch.setattr(recovery, "pfork_plus", lambda i, params: 0.001)
    p = TheoryParams(lambda_r=0.05, mu_h=0.1, n=100)
    assert recovery._visit_time(10, p) == pytest.approx(10 * math.log(1e4))
    assert recovery._visit_time(10, p) == pytest.approx(92.1034, abs=1e-4)


def _growth_params():
    g, _ = design_thresholds(10, 1e-4)
    return TheoryParams(lambda_r=0.05, mu_h=0.02, z0=10, gamma=g, n=100)


def test_growth_bound_shape():
    p = _growth_params()
    b = growth_prob_bound(12, 5000, p)
    assert 0 < b.delta <= 1 and b.n_max in (10, 11, 12)
    assert len(b.t_schedule) == 2
    short = growth_prob_bound(12, 3, p)
    assert short.delta == pytest.approx(1 - (1 - pfork_plus(10, p)) ** 3)


def test_growth_monotone_in_time():
    p = _growth_params()
    vals = [growth_prob_bound(13, t, p).delta for t in [10, 100, 1000, 5000, 20000, 10**6]]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 0.9), st.integers(11, 16))
@example(6.103515625e-05, 11)  # horizon below one step
def test_growth_time_roundtrip(delta, zb):
    p = _growth_params()
    t = growth_time_bound(delta, zb, p)
    if t >= 1e15:
        return
    assert growth_prob_bound(zb, max(t, 1e-9), p).delta <= delta + 1e-9


def test_growth_checks():
    p = _growth_params()
    with pytest.raises(ConfigError):
        growth_prob_bound(10, 100, p)
    with pytest.raises(ConfigError):
        growth_time_bound(1.0, 12, p)


def test_default_thresholds():
    th = default_thresholds(5, 4)
    assert th[()] == 6 and th[(0,)] == th[(1,)] == 8 and th[(1, 0)] == 10
    assert all(len(k) <= 2 for k in th)


def test_overshoot_depth_one():
    assert overshoot_exact(5, 0.0, 1, TOY, bound_fn=lambda h, p: 0.1) == pytest.approx(5.5)


def test_overshoot_no_forks():
    z, depth = 6, 4
    th = {(): z}
    for length in range(1, depth - 1):
        for key in [k for k in th if len(k) == length - 1]:
            th[key + (0,)] = th[key]
            th[key + (1,)] = th[key] + 1
    assert overshoot_exact(z, 0.0, depth, TOY, thresholds=th, bound_fn=lambda h, p: 0.0) == z


@pytest.mark.parametrize("pbar", [0.02, 0.1, 0.3])
def test_overshoot_dominates_fork_tree(pbar, rng):
    z, depth = 5, 5
    exact = overshoot_exact(z, 0.0, depth, TOY, bound_fn=lambda h, p: pbar)
    mc = fork_tree_mc(z, depth, lambda step, cur: pbar, 20000, rng)
    assert exact >= mc * (1 - 0.01)


def test_overshoot_threshold_checks():
    with pytest.raises(ConfigError):
        overshoot_exact(5, 0.0, 4, TOY, thresholds={(): 6, (1,): 6})
    with pytest.raises(ConfigError):
        overshoot_exact(5, 0.0, 13, TOY)


def test_overshoot_approx_series():
    s = overshoot_approx(5, -10.0, 0.0, 30, TOY)
    assert s.values[0] == 5.0 and len(s.values) == 31
    assert all(math.ceil(a - 1e-12) <= b + 1e-12 for a, b in zip(s.values, s.values[1:]))
    flat = overshoot_approx(5, None, 0.0, 10, TOY, bound_fn=lambda h, p: 0.0)
    assert flat.values == [5.0] * 11
