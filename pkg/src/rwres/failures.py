"""Threat models injected into the simulation step.

Three channels: scheduled bursts, independent per-visit loss, and a single
Byzantine node driven by a two-state Markov chain that swallows every walk
arriving while it is in the ``byz`` state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:
    from .engine import SimState

BYZ = "byz"
NO_BYZ = "no_byz"


@dataclass
class ByzantineConfig:
    node: int = 0
    p_transit: float = 0.0005  # placeholder; no value is published for the Byzantine experiment
    initial_state: str = NO_BYZ
    schedule_override: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.p_transit <= 1.0:
            raise ConfigError("p_transit must lie in [0, 1]")
        states = [self.initial_state] + [s for _, s in self.schedule_override]
        if any(s not in (BYZ, NO_BYZ) for s in states):
            raise ConfigError(f"Byzantine states must be {BYZ!r} or {NO_BYZ!r}")
        self.schedule_override = [(int(t), s) for t, s in self.schedule_override]

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "p_transit": self.p_transit,
            "initial_state": self.initial_state,
            "schedule_override": [list(x) for x in self.schedule_override],
        }


@dataclass
class FailurePlan:
    bursts: list[tuple[int, int]] = field(default_factory=list)
    p_fail: float = 0.0
    byzantine: Optional[ByzantineConfig] = None

    def __post_init__(self):
        self.bursts = [(int(t), int(c)) for t, c in self.bursts]
        times = [t for t, _ in self.bursts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("burst times must be strictly increasing")
        if any(c < 1 for _, c in self.bursts):
            raise ConfigError("burst counts must be >= 1")
        if not 0.0 <= self.p_fail < 1.0:
            raise ConfigError("p_fail must lie in [0, 1)")
        if isinstance(self.byzantine, dict):
            self.byzantine = ByzantineConfig(**self.byzantine)

    def burst_at(self, t: int) -> int:
        for bt, count in self.bursts:
            if bt == t:
                return count
        return 0

    def to_dict(self) -> dict:
        return {
            "bursts": [list(b) for b in self.bursts],
            "p_fail": self.p_fail,
            "byzantine": self.byzantine.to_dict() if self.byzantine else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FailurePlan":
        return cls(**data)


@dataclass
class ByzantineState:
    current: str = NO_BYZ


def byzantine_step(byz: ByzantineState, p_transit: float, rng: np.random.Generator) -> ByzantineState:
    if p_transit > 0.0 and rng.random() < p_transit:
        return ByzantineState(NO_BYZ if byz.current == BYZ else BYZ)
    return byz


def advance_byzantine(byz: ByzantineState, cfg: ByzantineConfig, t: int,
                      rng: np.random.Generator) -> ByzantineState:
    """Scripted state if the override schedules one at ``t``, else a chain step."""
    for st, state in cfg.schedule_override:
        if st == t:
            return ByzantineState(state)
    if cfg.schedule_override:
        # a scripted run holds its state between scheduled switches
        return byz
    return byzantine_step(byz, cfg.p_transit, rng)


def _kill(state: "SimState", walks, kind: str) -> list[str]:
    t = state.time
    killed = []
    for w in walks:
        w.active = False
        w.died_at = t
        state.trace.events.append((t, kind, w.id, w.position))
        killed.append(w.id)
    if killed:
        state.active = [w for w in state.active if w.active]
    return killed


def apply_probabilistic(state: "SimState", p_fail: float, rng: np.random.Generator) -> list[str]:
    if not 0.0 <= p_fail < 1.0:
        raise ConfigError("p_fail must lie in [0, 1)")
    if p_fail == 0.0 or not state.active:
        return []
    draws = rng.random(len(state.active))
    victims = [w for w, u in zip(state.active, draws) if u < p_fail]
    return _kill(state, victims, "prob_fail")


def apply_burst(state: "SimState", t: int) -> list[str]:
    count = min(state.failures.burst_at(t), len(state.active))
    if count == 0:
        return []
    idx = state.rng.choice(len(state.active), size=count, replace=False)
    victims = [state.active[i] for i in sorted(idx)]
    return _kill(state, victims, "burst_fail")


def absorb_at_byzantine(state: "SimState") -> list[str]:
    cfg = state.failures.byzantine
    if cfg is None or state.byz is None or state.byz.current != BYZ:
        return []
    victims = [w for w in state.active if w.position == cfg.node]
    return _kill(state, victims, "byz_kill")
