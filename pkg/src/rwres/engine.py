"""Synchronous discrete-time simulation of many walk tokens on one graph.

Every step: advance the clock, move all active walks, apply failures, let
each node with arrivals record them and run its policy once on one
uniformly chosen arrival, then materialise forks and terminations.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import failures as fl
from .errors import ConfigError, WarmupTimeout
from .graph import Graph
from .policies import FORK, TERMINATE, PolicyConfig, decide, estimate, survival

DEFAULT_WARMUP_CAP = 200_000


@dataclass(slots=True)
class WalkToken:
    id: str
    ident: int
    position: int
    active: bool = True
    born_at: int = 0
    died_at: Optional[int] = None
    born_node: int = -1

    @property
    def lineage(self) -> tuple[int, list[tuple[int, int]]]:
        return parse_walk_id(self.id)


def parse_walk_id(walk_id: str) -> tuple[int, list[tuple[int, int]]]:
    """Split ``"7/(12,2040)/(3,2100)"`` into root 7 and its fork points."""
    root, *forks = walk_id.split("/")
    pairs = []
    for f in forks:
        node, t = f.strip("()").split(",")
        pairs.append((int(node), int(t)))
    return int(root), pairs


class SeenTable(dict):
    """``walk id -> last-seen time`` dict that mirrors its values into an array.

    The array lets the estimator sum over large tables without rebuilding
    one per decision.  Deleted ids leave a far-past sentinel behind.
    """

    GONE = -(2**62)

    def __init__(self):
        super().__init__()
        self._slot: dict[int, int] = {}
        self._times = np.empty(16, dtype=np.int64)
        self._size = 0

    def __setitem__(self, key, value):
        dict.__setitem__(self, key, value)
        i = self._slot.get(key)
        if i is None:
            i = self._size
            if i == len(self._times):
                self._times = np.concatenate([self._times, np.empty(i, dtype=np.int64)])
            self._slot[key] = i
            self._size += 1
        self._times[i] = value

    def __delitem__(self, key):
        dict.__delitem__(self, key)
        self._times[self._slot.pop(key)] = self.GONE

    @property
    def times(self) -> np.ndarray:
        return self._times[: self._size]

    def shift(self, dt: int) -> None:
        for k in self:
            dict.__setitem__(self, k, dict.__getitem__(self, k) - dt)
        live = self.times != self.GONE
        self._times[: self._size][live] -= dt


class NodeState:
    """Per-node last-seen table and pooled return-gap counts.

    ``tail[e]`` holds the number of recorded gaps strictly greater than ``e``;
    the array is always longer than the largest gap, so ``tail[-1] == 0``.
    """

    __slots__ = ("last_seen", "origin", "tail", "sample_count", "rate")

    def __init__(self, capacity: int = 512):
        self.last_seen = SeenTable()
        self.origin = 0
        self.tail = np.zeros(capacity, dtype=np.int64)
        self.sample_count = 0
        self.rate: Optional[float] = None

    @property
    def known(self) -> set[int]:
        return set(self.last_seen)

    def add_sample(self, gap: int) -> None:
        if gap >= len(self.tail):
            size = len(self.tail)
            while size <= gap:
                size *= 2
            grown = np.zeros(size, dtype=np.int64)
            grown[: len(self.tail)] = self.tail
            self.tail = grown
        self.tail[:gap] += 1
        self.sample_count += 1

    def tail_count(self, elapsed: int) -> int:
        if elapsed < 0:
            return self.sample_count
        if elapsed >= len(self.tail):
            return 0
        return int(self.tail[elapsed])

    @property
    def return_samples(self) -> np.ndarray:
        counts = self.tail[:-1] - self.tail[1:]
        return np.repeat(np.arange(1, len(self.tail)), counts)

    def shift(self, dt: int) -> None:
        self.last_seen.shift(dt)
        self.origin -= dt


def record_visit(node_state: NodeState, walk_id: int, t: int) -> bool:
    """Record an arrival; returns True when the walk was new to the node."""
    seen = node_state.last_seen.get(walk_id)
    node_state.last_seen[walk_id] = t
    if seen is None:
        return True
    node_state.add_sample(t - seen)
    return False


@dataclass
class RunTrace:
    z_series: list[int] = field(default_factory=list)
    events: list[tuple[int, str, str, int]] = field(default_factory=list)
    estimates: Optional[list[tuple[int, int, float]]] = None
    survivals: Optional[list[float]] = None
    hitting_sum: int = 0
    hitting_count: int = 0

    def step_counts(self) -> dict[int, tuple[int, int]]:
        """Map each time step to its (forks, deaths) counts."""
        counts: dict[int, list[int]] = {}
        for t, kind, _, _ in self.events:
            c = counts.setdefault(t, [0, 0])
            c[0 if kind == FORK else 1] += 1
        return {t: (f, d) for t, (f, d) in counts.items()}


@dataclass
class SimState:
    graph: Graph
    policy: PolicyConfig
    failures: fl.FailurePlan
    rng: np.random.Generator
    walks: list[WalkToken]
    nodes: list[NodeState]
    active: list[WalkToken]
    coverage: list[bytearray]
    trace: RunTrace
    time: int = 0
    warmup_done: bool = False
    warmup_steps: int = 0
    byz: Optional[fl.ByzantineState] = None
    prune_below: Optional[float] = None
    next_ident: int = 0

    @property
    def z(self) -> int:
        return len(self.active)


def init_simulation(graph: Graph, policy_cfg: PolicyConfig, failure_plan: fl.FailurePlan,
                    z0: int, placement: str = "single_node", seed: int = 0, *,
                    record_estimates: bool = False, record_survivals: bool = False,
                    prune_below: Optional[float] = None) -> SimState:
    if z0 < 1:
        raise ConfigError("z0 must be >= 1")
    rng = np.random.default_rng(seed)
    if placement == "single_node":
        positions = [int(rng.integers(graph.n))] * z0
    elif placement == "random_nodes":
        positions = [int(x) for x in rng.integers(graph.n, size=z0)]
    else:
        raise ConfigError(f"unknown placement {placement!r}")
    walks = [WalkToken(id=str(k), ident=k, position=p) for k, p in enumerate(positions)]
    nodes = [NodeState() for _ in range(graph.n)]
    if policy_cfg.survival_mode == "analytical" and policy_cfg.survival_rate is None:
        from .theory import spectral_return_rates

        for node, rate in zip(nodes, spectral_return_rates(graph)):
            node.rate = float(rate)
    byz = None
    if failure_plan.byzantine is not None:
        if not 0 <= failure_plan.byzantine.node < graph.n:
            raise ConfigError("Byzantine node outside the graph")
        byz = fl.ByzantineState(failure_plan.byzantine.initial_state)
    trace = RunTrace(z_series=[], estimates=[] if record_estimates else None,
                     survivals=[] if record_survivals else None)
    return SimState(graph=graph, policy=policy_cfg, failures=failure_plan, rng=rng,
                    walks=walks, nodes=nodes, active=list(walks),
                    coverage=[bytearray(graph.n) for _ in range(z0)], trace=trace,
                    byz=byz, prune_below=prune_below, next_ident=z0)


def _move(state: SimState) -> None:
    adj = state.graph.adjacency
    active = state.active
    if not active:
        return
    degs = [len(adj[w.position]) for w in active]
    picks = state.rng.integers(0, degs)
    for w, k in zip(active, picks.tolist()):
        w.position = adj[w.position][k]


def warmup(state: SimState, cap: int = DEFAULT_WARMUP_CAP) -> SimState:
    """Move and record until each initial walk has visited every node, then reset t to 0."""
    if state.warmup_done:
        raise ConfigError("warmup already done")
    n = state.graph.n
    remaining = [n - sum(c) for c in state.coverage]
    pending = sum(1 for r in remaining if r > 0)
    nodes = state.nodes
    initial = state.walks[: len(state.coverage)]
    while pending:
        if state.time >= cap:
            raise WarmupTimeout(f"coverage incomplete after {cap} warmup steps")
        state.time += 1
        t = state.time
        _move(state)
        for w in state.active:
            record_visit(nodes[w.position], w.ident, t)
        for k, w in enumerate(initial):
            cov = state.coverage[k]
            if not cov[w.position]:
                cov[w.position] = 1
                remaining[k] -= 1
                if remaining[k] == 0:
                    pending -= 1
    dt = state.time
    for node in nodes:
        node.shift(dt)
    for w in state.walks:
        w.born_at -= dt
    state.warmup_steps = dt
    state.time = 0
    state.warmup_done = True
    if state.policy.kind == "missing_person" and state.policy.t_mp is None:
        state.policy = replace(state.policy, t_mp=default_t_mp(state))
    state.trace.z_series.append(len(state.active))
    return state


def default_t_mp(state: SimState) -> int:
    """Quantile ``1 - 0.01 / z0`` of all pooled return gaps (at least 2)."""
    tails = [node.tail for node in state.nodes if node.sample_count]
    if not tails:
        return 2
    size = max(len(t) for t in tails)
    total = np.zeros(size, dtype=np.int64)
    for t in tails:
        total[: len(t)] += t
    level = 1.0 - 0.01 / state.policy.z0
    count = total[0]
    # smallest e with P(gap > e) <= 1 - level
    idx = int(np.searchsorted(-total, -(1.0 - level) * count, side="left"))
    return max(2, idx)


def fork_walk(state: SimState, node: int, parent: WalkToken, t: int,
              replace_ident: Optional[int] = None) -> WalkToken:
    if replace_ident is None:
        child = WalkToken(id=f"{parent.id}/({node},{t})", ident=state.next_ident,
                          position=node, born_at=t, born_node=node)
        state.next_ident += 1
    else:
        child = WalkToken(id=str(replace_ident), ident=replace_ident, position=node,
                          born_at=t, born_node=node)
    state.walks.append(child)
    return child


def _deactivate(state: SimState, walk: WalkToken, kind: str, events: list) -> None:
    walk.active = False
    walk.died_at = state.time
    events.append((state.time, kind, walk.id, walk.position))


def _prune(node: NodeState, t: int, cfg: PolicyConfig, threshold: float) -> None:
    stale = [k for k, seen in node.last_seen.items() if survival(node, t - seen, cfg) < threshold]
    for k in stale:
        del node.last_seen[k]


def step(state: SimState) -> list[tuple[int, str, str, int]]:
    """Advance one step; returns the events recorded during it."""
    if not state.warmup_done:
        raise ConfigError("step called before warmup")
    trace = state.trace
    first_event = len(trace.events)
    state.time += 1
    t = state.time
    _move(state)

    plan = state.failures
    if plan.p_fail > 0.0:
        fl.apply_probabilistic(state, plan.p_fail, state.rng)
    if plan.bursts:
        fl.apply_burst(state, t)
    if plan.byzantine is not None:
        state.byz = fl.advance_byzantine(state.byz, plan.byzantine, t, state.rng)
        fl.absorb_at_byzantine(state)

    arrivals: dict[int, list[WalkToken]] = {}
    for w in state.active:
        arrivals.setdefault(w.position, []).append(w)

    cfg = state.policy
    kind = cfg.kind
    want_estimate = trace.estimates is not None or trace.survivals is not None
    rng = state.rng
    born: list[WalkToken] = []
    ended = False
    events = trace.events
    for node_id, group in arrivals.items():
        node = state.nodes[node_id]
        for w in group:
            if record_visit(node, w.ident, t) and w.born_at > 0 and w.born_node != node_id:
                trace.hitting_sum += t - w.born_at
                trace.hitting_count += 1
        chosen = group[0] if len(group) == 1 else group[int(rng.integers(len(group)))]
        if state.prune_below is not None and kind != "missing_person":
            _prune(node, t, cfg, state.prune_below)
        if kind == "none":
            if want_estimate:
                _log_estimate(trace, node, node_id, chosen.ident, t, cfg)
            continue
        if want_estimate and kind != "missing_person":
            _log_estimate(trace, node, node_id, chosen.ident, t, cfg)
        decision = decide(node, chosen.ident, t, cfg, rng)
        if decision.action == FORK:
            if decision.replace_ids:
                for ell in decision.replace_ids:
                    child = fork_walk(state, node_id, chosen, t, replace_ident=ell)
                    node.last_seen[ell] = t
                    born.append(child)
                    events.append((t, FORK, child.id, node_id))
            else:
                child = fork_walk(state, node_id, chosen, t)
                born.append(child)
                events.append((t, FORK, child.id, node_id))
        elif decision.action == TERMINATE:
            _deactivate(state, chosen, TERMINATE, events)
            ended = True
    if ended:
        state.active = [w for w in state.active if w.active]
    state.active.extend(born)
    trace.z_series.append(len(state.active))
    return events[first_event:]


def _log_estimate(trace: RunTrace, node: NodeState, node_id: int, visiting: int, t: int,
                  cfg: PolicyConfig) -> None:
    if trace.estimates is not None:
        trace.estimates.append((t, node_id, estimate(node, visiting, t, cfg)))
    if trace.survivals is not None:
        for k, seen in node.last_seen.items():
            if k != visiting:
                trace.survivals.append(survival(node, t - seen, cfg))


def run(state: SimState, horizon: int) -> RunTrace:
    if not state.warmup_done:
        raise ConfigError("run called before warmup")
    for _ in range(horizon):
        step(state)
    return state.trace
