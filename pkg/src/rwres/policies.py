"""Node-local control policies: MissingPerson, DecAFork and DecAFork+.

Each policy runs on one visiting walk at one node and sees only that node's
bookkeeping (last-seen times and its pooled return-time samples).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

KINDS = ("none", "missing_person", "decafork", "decafork_plus")

NONE, FORK, TERMINATE = "none", "fork", "terminate"

_VECTOR_MIN = 48  # table size above which numpy beats the plain loop


@dataclass
class PolicyConfig:
    kind: str = "decafork"
    z0: int = 10
    gamma: float = 2.0
    gamma_term: Optional[float] = None
    t_mp: Optional[int] = None
    fork_prob: Optional[float] = None
    survival_mode: str = "empirical"
    survival_rate: Optional[float] = None
    offset_mode: str = "half"
    offset_q: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.z0 < 1:
            raise ConfigError("z0 must be >= 1")
        if self.fork_prob is None:
            self.fork_prob = 1.0 / self.z0
        if not 0.0 < self.fork_prob <= 1.0:
            raise ConfigError("fork_prob must lie in (0, 1]")
        if self.kind in ("decafork", "decafork_plus") and self.gamma <= 0.5:
            raise ConfigError("gamma must exceed 1/2")
        if self.kind == "decafork_plus":
            if self.gamma_term is None or self.gamma_term <= self.gamma:
                raise ConfigError("decafork_plus requires gamma_term > gamma")
        if self.t_mp is not None and self.t_mp < 2:
            raise ConfigError("t_mp must be >= 2")
        if self.survival_mode not in ("empirical", "analytical"):
            raise ConfigError(f"unknown survival_mode {self.survival_mode!r}")
        if self.survival_rate is not None and self.survival_rate <= 0:
            raise ConfigError("survival_rate must be positive")
        if self.offset_mode not in ("half", "geometric"):
            raise ConfigError(f"unknown offset_mode {self.offset_mode!r}")
        if not 0.0 <= self.offset_q < 1.0:
            raise ConfigError("offset_q must lie in [0, 1)")

    @property
    def offset(self) -> float:
        if self.offset_mode == "half":
            return 0.5
        q = self.offset_q
        return (1.0 - q) / (2.0 - q)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyConfig":
        return cls(**data)


@dataclass
class Decision:
    action: str = NONE
    estimate: Optional[float] = None
    replace_ids: list[int] = field(default_factory=list)


def survival(node_state, elapsed: int, cfg: PolicyConfig) -> float:
    """Estimated probability that a return gap exceeds ``elapsed`` steps."""
    if cfg.survival_mode == "analytical":
        rate = cfg.survival_rate if cfg.survival_rate is not None else node_state.rate
        return math.exp(-rate * elapsed)
    n = node_state.sample_count
    if n == 0:
        return 1.0
    return node_state.tail_count(elapsed) / n


def estimate(node_state, visiting_id: int, t: int, cfg: PolicyConfig) -> float:
    """Offset plus summed survival of every other walk the node has seen."""
    last_seen = node_state.last_seen
    total = 0.0
    big = len(last_seen) > _VECTOR_MIN and hasattr(last_seen, "times")
    if cfg.survival_mode == "analytical":
        rate = cfg.survival_rate if cfg.survival_rate is not None else node_state.rate
        if big:
            total = float(np.exp(-rate * (t - last_seen.times)).sum())
            seen = last_seen.get(visiting_id)
            if seen is not None:
                total -= math.exp(-rate * (t - seen))
            return cfg.offset + total
        exp = math.exp
        for key, seen in last_seen.items():
            if key != visiting_id:
                total += exp(-rate * (t - seen))
        return cfg.offset + total
    n = node_state.sample_count
    if n == 0:
        return cfg.offset + (len(last_seen) - (visiting_id in last_seen))
    tail = node_state.tail
    size = len(tail)
    if big:
        elapsed = t - last_seen.times
        hits = int(tail[np.minimum(elapsed, size - 1)].sum())
        seen = last_seen.get(visiting_id)
        if seen is not None and t - seen < size:
            hits -= int(tail[t - seen])
        return cfg.offset + hits / n
    hits = 0
    for key, seen in last_seen.items():
        if key != visiting_id:
            e = t - seen
            if e < size:
                hits += tail[e]
    return cfg.offset + int(hits) / n


def decafork_decide(z_hat: float, cfg: PolicyConfig, rng) -> Decision:
    if z_hat < cfg.gamma and rng.random() < cfg.fork_prob:
        return Decision(FORK, z_hat)
    return Decision(NONE, z_hat)


def decaforkplus_decide(z_hat: float, cfg: PolicyConfig, rng) -> Decision:
    if cfg.gamma_term is None or cfg.gamma_term <= cfg.gamma:
        raise ConfigError("decafork_plus requires gamma_term > gamma")
    if z_hat < cfg.gamma:
        return decafork_decide(z_hat, cfg, rng)
    if z_hat > cfg.gamma_term and rng.random() < cfg.fork_prob:
        return Decision(TERMINATE, z_hat)
    return Decision(NONE, z_hat)


def missing_person_decide(node_state, visiting_id: int, t: int, cfg: PolicyConfig, rng) -> Decision:
    """Replace every initial walk not seen for more than ``t_mp`` steps, each w.p. ``fork_prob``.

    Initial walks the node never saw count as last seen at ``node_state.origin``.
    """
    if cfg.t_mp is None:
        raise ConfigError("missing_person requires a resolved t_mp")
    last_seen = node_state.last_seen
    origin = node_state.origin
    replace = []
    for ell in range(cfg.z0):
        if ell == visiting_id:
            continue
        if t - last_seen.get(ell, origin) > cfg.t_mp and rng.random() < cfg.fork_prob:
            replace.append(ell)
    return Decision(FORK if replace else NONE, None, replace)


def decide(node_state, visiting_id: int, t: int, cfg: PolicyConfig, rng) -> Decision:
    if cfg.kind == "missing_person":
        return missing_person_decide(node_state, visiting_id, t, cfg, rng)
    z_hat = estimate(node_state, visiting_id, t, cfg)
    if cfg.kind == "decafork":
        return decafork_decide(z_hat, cfg, rng)
    if cfg.kind == "decafork_plus":
        return decaforkplus_decide(z_hat, cfg, rng)
    return Decision(NONE, z_hat)
