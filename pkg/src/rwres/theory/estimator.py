"""Moments of the node estimate under an event history, and Bennett-type trigger bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ..errors import ConfigError
from .forked import forked_mean, forked_var, forked_var_integrated
from .irwin_hall import irwin_hall_cdf

VAR_METHODS = ("integrated", "printed")


@dataclass(frozen=True)
class TheoryParams:
    lambda_r: float
    mu_h: float
    z0: int = 10
    fork_prob: Optional[float] = None
    gamma: float = 2.0
    gamma_term: Optional[float] = None
    n: int = 100

    def __post_init__(self):
        if self.lambda_r <= 0 or self.mu_h <= 0:
            raise ConfigError("lambda_r and mu_h must be positive")
        if self.z0 < 1:
            raise ConfigError("z0 must be >= 1")
        if self.fork_prob is None:
            object.__setattr__(self, "fork_prob", 1.0 / self.z0)
        if not 0.0 <= self.fork_prob <= 1.0:
            raise ConfigError("fork_prob must lie in [0, 1]")
        if self.n < 1:
            raise ConfigError("n must be >= 1")

    @property
    def p(self) -> float:
        return self.fork_prob


@dataclass(frozen=True)
class EventHistory:
    """Walks active now, plus walks that ended at ``tau_t`` and walks forked at ``tau_f``.

    Forked walks are still active; ``active_count`` counts only the rest,
    including the visiting walk.
    """

    active_count: int
    terminations: tuple = field(default_factory=tuple)
    forks: tuple = field(default_factory=tuple)
    now: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terminations", tuple((float(a), int(b)) for a, b in self.terminations))
        object.__setattr__(self, "forks", tuple((float(a), int(b)) for a, b in self.forks))
        if self.active_count < 0:
            raise ConfigError("active_count must be >= 0")
        for tau, count in self.terminations + self.forks:
            if tau > self.now:
                raise ConfigError("event times must not exceed now")
            if count < 1:
                raise ConfigError("event counts must be >= 1")

    def to_dict(self) -> dict:
        return {"active_count": self.active_count, "terminations": [list(x) for x in self.terminations],
                "forks": [list(x) for x in self.forks], "now": self.now}

    @classmethod
    def from_dict(cls, data: dict) -> "EventHistory":
        return cls(**data)


def expected_estimate(h: EventHistory, params: TheoryParams) -> float:
    if h.active_count < 1:
        raise ConfigError("expected_estimate needs at least the visiting walk active")
    lam, mu, t = params.lambda_r, params.mu_h, h.now
    total = 0.5 + (h.active_count - 1) / 2
    for tau, count in h.terminations:
        total += count * math.exp(-lam * (t - tau)) / 2
    for tau, count in h.forks:
        total += count * forked_mean(t, tau, t, lam, mu)
    return total


def estimate_variance(h: EventHistory, params: TheoryParams, method: str = "integrated") -> float:
    """Variance of the estimate; ``method="printed"`` uses the printed closed-form forked-walk variance."""
    if method not in VAR_METHODS:
        raise ConfigError(f"unknown variance method {method!r}")
    if h.active_count < 1:
        raise ConfigError("estimate_variance needs at least the visiting walk active")
    lam, mu, t = params.lambda_r, params.mu_h, h.now
    fvar = forked_var if method == "printed" else forked_var_integrated
    total = (h.active_count - 1) / 12
    for tau, count in h.terminations:
        total += count * math.exp(-2 * lam * (t - tau)) / 12
    for tau, count in h.forks:
        total += count * fvar(t, tau, t, lam, mu)
    return total


def bennett_h(zeta: float) -> float:
    return (1 + zeta) * math.log1p(zeta) - zeta


class TriggerBound(NamedTuple):
    value: float
    precondition_ok: bool


def _bennett(p: float, gap: float, var: float) -> TriggerBound:
    if gap <= 0:
        return TriggerBound(p, False)
    if var <= 0:
        return TriggerBound(0.0, True)
    return TriggerBound(p * math.exp(-var * bennett_h(gap * gap / var)), True)


def fork_prob_bound(h: EventHistory, params: TheoryParams, method: str = "integrated") -> TriggerBound:
    """Upper bound on the per-visit fork probability; ``precondition_ok`` is False when E <= gamma."""
    mean = expected_estimate(h, params)
    return _bennett(params.p, mean - params.gamma, estimate_variance(h, params, method))


def term_prob_bound(h: EventHistory, params: TheoryParams, method: str = "integrated") -> TriggerBound:
    if params.gamma_term is None:
        raise ConfigError("term_prob_bound needs gamma_term")
    mean = expected_estimate(h, params)
    return _bennett(params.p, params.gamma_term - mean, estimate_variance(h, params, method))


def pfork_plus(i: int, params: TheoryParams) -> float:
    """Bound on the probability that some node forks in one step while ``i`` walks are active."""
    if i < 1:
        raise ConfigError("i must be >= 1")
    return min(1.0, i * params.p * irwin_hall_cdf(i - 1, params.gamma - 0.5))
