"""Reaction-time, growth and overshoot bounds built from the estimator laws."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.stats import binom

from ..errors import BoundNotReached, ConfigError
from .estimator import EventHistory, TheoryParams, fork_prob_bound, pfork_plus
from .irwin_hall import irwin_hall_cdf

DEFAULT_STEP_CAP = 10**7
EPS_GRID_SIZE = 64
MAX_DEPTH = 12


class ReactionBound(NamedTuple):
    steps: int
    eps: float


def default_eps_grid(gamma: float, size: int = EPS_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, gamma - 0.5, size + 2)[1:-1]


def _steps_for_eps(k_t, r, z_active, params, log_target, eps, cap) -> Optional[int]:
    p, lam = params.p, params.lambda_r
    head = irwin_hall_cdf(z_active + r - 1, eps)
    m = k_t - r
    scale = params.gamma - eps - 0.5
    log_prod = 0.0
    el = 0
    while el <= cap:
        arg = scale * math.exp(min(lam * el, 700.0))
        tail = irwin_hall_cdf(m, arg)
        factor = 1.0 - p * head * tail
        if factor <= 0.0:
            return el
        log_prod += math.log(factor)
        if log_prod <= log_target:
            return el
        if tail >= 1.0:
            # every later factor is the same constant
            if factor >= 1.0:
                return None
            more = math.ceil((log_target - log_prod) / math.log(factor))
            return el + more if el + more <= cap else None
        el += 1
    return None


def reaction_time_bound(k_t: int, r: int, z_active: int, params: TheoryParams, delta_target: float,
                        eps_grid=None, step_cap: int = DEFAULT_STEP_CAP) -> ReactionBound:
    """Steps after ``k_t`` walks fail (``r`` forks done so far) until a fork happens w.p. >= 1 - delta.

    The bound is the first elapsed time at which the running product of
    per-step no-fork bounds drops to ``delta_target``, minimised over the
    split point ``eps`` of the threshold between active and failed walks.
    """
    if not 0.0 < delta_target < 1.0:
        raise ConfigError("delta_target must lie in (0, 1)")
    if k_t < 1 or not 0 <= r < k_t:
        raise ConfigError("need k_t >= 1 and 0 <= r < k_t")
    if z_active < 0 or z_active + r < 1:
        raise ConfigError("need at least one active walk")
    grid = default_eps_grid(params.gamma) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if len(grid) == 0 or np.any(grid <= 0) or np.any(grid >= params.gamma - 0.5):
        raise ConfigError("eps_grid must lie inside (0, gamma - 1/2)")
    best: Optional[ReactionBound] = None
    log_target = math.log(delta_target)
    for eps in grid:
        steps = _steps_for_eps(k_t, r, z_active, params, log_target, float(eps), step_cap)
        if steps is not None and (best is None or steps < best.steps):
            best = ReactionBound(steps, float(eps))
    if best is None:
        raise BoundNotReached(f"no fork guarantee within {step_cap} steps")
    return best


def reaction_time_chain(k_t: int, r_prime: int, z_active: int, params: TheoryParams, delta_total: float,
                        eps_grid=None, step_cap: int = DEFAULT_STEP_CAP) -> tuple[int, list[ReactionBound]]:
    """Time to recover ``r_prime`` of ``k_t`` failed walks, splitting ``delta_total`` evenly."""
    if not 1 <= r_prime <= k_t:
        raise ConfigError("need 1 <= r_prime <= k_t")
    share = delta_total / r_prime
    parts = [reaction_time_bound(k_t, r, z_active, params, share, eps_grid, step_cap) for r in range(r_prime)]
    return sum(p.steps for p in parts), parts


def _visit_time(i: int, params: TheoryParams) -> float:
    pp = pfork_plus(i, params)
    if pp <= 0.0:
        return math.inf
    return max(0.0, math.log(params.mu_h * params.n / pp) / params.mu_h)


class GrowthBound(NamedTuple):
    delta: float
    n_max: int
    t_schedule: list[float]


def growth_prob_bound(z_bound: int, t_total: float, params: TheoryParams) -> GrowthBound:
    """Bound on the probability that more than ``z_bound`` walks exist by ``t_total``."""
    if z_bound <= params.z0:
        raise ConfigError("z_bound must exceed z0")
    if t_total <= 0:
        raise ConfigError("t_total must be positive")
    z0, mu, n = params.z0, params.mu_h, params.n
    sched = [_visit_time(i, params) for i in range(z0, z_bound)]
    if t_total < sched[0]:
        return GrowthBound(min(1.0, 1.0 - (1.0 - pfork_plus(z0, params)) ** t_total), z0, sched)
    n_max, spent = z0, 0.0
    while n_max < z_bound and spent + sched[n_max - z0] < t_total:
        spent += sched[n_max - z0]
        n_max += 1
    delta = pfork_plus(n_max, params) * (t_total - spent)
    for i in range(z0, n_max):
        ti = sched[i - z0]
        delta += n * math.exp(-mu * ti) + ti * pfork_plus(i, params)
    return GrowthBound(min(1.0, max(0.0, delta)), n_max, sched)


def growth_time_bound(delta: float, z_bound: int, params: TheoryParams,
                      step_cap: float = 1e15) -> float:
    """Largest horizon whose growth bound stays within ``delta`` (capped at ``step_cap``)."""
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    if z_bound <= params.z0:
        raise ConfigError("z_bound must exceed z0")
    z0, mu, n = params.z0, params.mu_h, params.n
    sched = [_visit_time(i, params) for i in range(z0, z_bound)]
    n_max, spent, d_sum = z0, 0.0, 0.0
    while n_max < z_bound:
        ti = sched[n_max - z0]
        if math.isinf(ti):
            break
        step = n * math.exp(-mu * ti) + ti * pfork_plus(n_max, params)
        if d_sum + step > delta:
            break
        d_sum += step
        spent += ti
        n_max += 1
    pp = pfork_plus(n_max, params)
    if pp <= 0.0:
        return float(step_cap)
    rest = (delta - d_sum) / pp
    if n_max < z_bound:
        # past t_{n_max} the schedule would move on to the next walk count
        rest = min(rest, sched[n_max - z0] * (1 - 1e-12))
    if n_max == z0:
        # the horizon stays below t_{z0}, where the bound is 1 - (1 - p+)^T; invert it exactly
        short = math.log1p(-delta) / math.log1p(-pp) if pp < 1.0 else 0.0
        rest = min(short, sched[0] * (1 - 1e-12))
    return min(float(step_cap), spent + rest)


BoundFn = Callable[[EventHistory, TheoryParams], float]


def _history(z_start: int, forks: list[tuple[float, int]], now: float, tau_t, failed) -> EventHistory:
    terms = [(tau_t, failed)] if failed and tau_t is not None else []
    return EventHistory(active_count=z_start, terminations=terms, forks=forks, now=now)


def _bound(h: EventHistory, params: TheoryParams, bound_fn: Optional[BoundFn]) -> tuple[float, bool]:
    if bound_fn is not None:
        return float(bound_fn(h, params)), True
    b = fork_prob_bound(h, params)
    return b.value, b.precondition_ok


class OvershootSeries(NamedTuple):
    values: list[float]
    precondition_ok: bool


def overshoot_approx(z_start: int, tau_t: Optional[float], t_first_fork: float, horizon: int,
                     params: TheoryParams, failed: Optional[int] = None,
                     bound_fn: Optional[BoundFn] = None) -> OvershootSeries:
    """Linear-cost approximate bound on the expected walk count after the first fork.

    Each step assumes the expected number of forks happened, rounded up.
    Because the rounding adds at least one walk whenever the fork bound is
    positive, the series keeps growing and never settles.
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if failed is None:
        failed = max(0, params.z0 - z_start)
    values = [float(z_start)]
    prev_ceil = z_start
    forks: list[tuple[float, int]] = []
    ok = True
    for j in range(1, horizon + 1):
        now = t_first_fork + j - 1
        pbar, good = _bound(_history(z_start, forks, now, tau_t, failed), params, bound_fn)
        ok &= good
        value = prev_ceil + prev_ceil * pbar
        values.append(value)
        ceil = math.ceil(value - 1e-12)
        if ceil > prev_ceil:
            forks.append((now + 1, ceil - prev_ceil))
        prev_ceil = ceil
    return OvershootSeries(values, ok)


def default_thresholds(z: int, depth: int) -> dict[tuple[int, ...], int]:
    """Geometric schedule: every child threshold is ceil(1.2 * parent), the root ceil(1.2 * z)."""
    out = {(): math.ceil(1.2 * z)}
    for length in range(1, depth - 1):
        for key in [k for k in out if len(k) == length - 1]:
            child = math.ceil(1.2 * out[key])
            out[key + (0,)] = child
            out[key + (1,)] = child
    return out


def _check_thresholds(th: dict, depth: int) -> None:
    for key, value in th.items():
        if len(key) >= depth - 1:
            continue
        for bit, ok in ((1, lambda c: c > value), (0, lambda c: c <= 2 * value)):
            child = th.get(key + (bit,))
            if child is not None and not ok(child):
                raise ConfigError(f"threshold constraint violated below prefix {key}")


def overshoot_exact(z_after_failure: int, t_first_fork: float, depth: int, params: TheoryParams,
                    thresholds: Optional[dict] = None, tau_t: Optional[float] = None,
                    failed: Optional[int] = None, bound_fn: Optional[BoundFn] = None) -> float:
    """Path-enumeration bound on the expected walk count ``depth`` steps after the first fork.

    Level ``j`` of the binary tree either keeps the count at its threshold
    (left) or doubles it (right, weighted by a binomial tail of the fork
    bound).  ``thresholds`` maps each prefix tuple to its threshold.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ConfigError(f"depth must lie in [1, {MAX_DEPTH}]")
    th = default_thresholds(z_after_failure, depth)
    if thresholds:
        th.update({tuple(k): int(v) for k, v in thresholds.items()})
    _check_thresholds(th, depth)
    if failed is None:
        failed = max(0, params.z0 - z_after_failure)

    def walk(level: int, prefix: tuple, z: int, forks: list, weight: float) -> float:
        now = t_first_fork + level - 1
        pbar, _ = _bound(_history(z_after_failure, forks, now, tau_t, failed), params, bound_fn)
        if level == depth:
            return weight * z * (1 + pbar)
        zeta = th[prefix]
        total = 0.0
        grow = zeta - z
        if grow >= 0:
            # counts never drop, so a threshold below z leaves only the right branch
            left_forks = forks + [(now + 1, grow)] if grow > 0 else forks
            total += walk(level + 1, prefix + (0,), zeta, left_forks, weight)
        right = 1.0 if grow < 0 else float(binom.sf(grow, z, pbar))
        if right > 0.0:
            total += walk(level + 1, prefix + (1,), 2 * z, forks + [(now + 1, z)], weight * right)
        return total

    return walk(1, (), z_after_failure, [], 1.0)
