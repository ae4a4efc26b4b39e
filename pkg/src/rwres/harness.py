"""Multi-run experiments, aggregation, artifacts and figure presets."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import engine
from .errors import ConfigError
from .failures import BYZ, NO_BYZ, ByzantineConfig, FailurePlan
from .graph import GraphSpec, generate
from .policies import PolicyConfig

SEED_ENV = "RWRES_SEED"
PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")
BURSTS = [(2000, 5), (6000, 6)]


@dataclass
class OutputOptions:
    trace_csv: bool = True
    events_jsonl: bool = True
    estimates: bool = False


@dataclass
class ExperimentConfig:
    graph: GraphSpec = field(default_factory=GraphSpec)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    failures: FailurePlan = field(default_factory=FailurePlan)
    z0: int = 10
    horizon: int = 10_000
    runs: int = 50
    seed: int = 0
    outputs: OutputOptions = field(default_factory=OutputOptions)
    warmup_cap: int = engine.DEFAULT_WARMUP_CAP
    placement: str = "single_node"
    fixed_graph: bool = False

    def __post_init__(self):
        if isinstance(self.graph, dict):
            self.graph = GraphSpec.from_dict(self.graph)
        if isinstance(self.policy, dict):
            self.policy = PolicyConfig.from_dict({"z0": self.z0, **self.policy})
        if isinstance(self.failures, dict):
            self.failures = FailurePlan.from_dict(self.failures)
        if isinstance(self.outputs, dict):
            self.outputs = OutputOptions(**self.outputs)
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.policy.z0 != self.z0:
            raise ConfigError("policy.z0 must equal z0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "policy": self.policy.to_dict(),
            "failures": self.failures.to_dict(),
            "z0": self.z0,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "outputs": asdict(self.outputs),
            "warmup_cap": self.warmup_cap,
            "placement": self.placement,
            "fixed_graph": self.fixed_graph,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer") from exc


def run_seeds(seed: int, run: int) -> tuple[int, int]:
    """Independent (graph, simulation) seeds for one run; depend only on (seed, run)."""
    g = np.random.SeedSequence([seed, run, 0]).generate_state(2, dtype=np.uint32)
    s = np.random.SeedSequence([seed, run, 1]).generate_state(2, dtype=np.uint32)
    return int(g[0]) | int(g[1]) << 32, int(s[0]) | int(s[1]) << 32


@dataclass
class RunResult:
    index: int
    z: np.ndarray
    events: list
    estimates: Optional[list]
    warmup_steps: int
    t_mp: Optional[int]
    lambda_hat: Optional[float]
    mu_hat: Optional[float]


def simulate_run(config: ExperimentConfig, index: int) -> RunResult:
    from .theory import fit_hitting_rate, fit_return_rate

    graph_seed, _ = run_seeds(config.seed, 0 if config.fixed_graph else index)
    _, sim_seed = run_seeds(config.seed, index)
    spec = GraphSpec.from_dict({**config.graph.to_dict(), "seed": graph_seed})
    g = generate(spec)
    state = engine.init_simulation(g, config.policy, config.failures, config.z0, config.placement,
                                   seed=sim_seed, record_estimates=config.outputs.estimates)
    engine.warmup(state, cap=config.warmup_cap)
    trace = engine.run(state, config.horizon)
    try:
        lam = fit_return_rate(state.nodes)
    except ConfigError:
        lam = None
    try:
        mu = fit_hitting_rate(trace)
    except ConfigError:
        mu = None
    return RunResult(index, np.asarray(trace.z_series, dtype=np.int64), trace.events, trace.estimates,
                     state.warmup_steps, state.policy.t_mp, lam, mu)


@dataclass
class AggregateTrace:
    t: np.ndarray
    mean_z: np.ndarray
    std_z: np.ndarray
    min_z: np.ndarray
    max_z: np.ndarray
    frac_extinct: np.ndarray


def aggregate(series: list[np.ndarray]) -> AggregateTrace:
    z = np.vstack(series).astype(float)
    return AggregateTrace(
        t=np.arange(z.shape[1]),
        mean_z=z.mean(axis=0),
        std_z=z.std(axis=0),
        min_z=z.min(axis=0),
        max_z=z.max(axis=0),
        frac_extinct=(z == 0).mean(axis=0),
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    aggregate: AggregateTrace
    runs: list[RunResult]


def run_experiment(config: ExperimentConfig, out_dir=None, parallel: int = 1) -> ExperimentResult:
    """Run every replicate, aggregate, and write artifacts to ``out_dir`` if given.

    Results are ordered by run index, so the output does not depend on
    ``parallel``.
    """
    indices = range(config.runs)
    if parallel > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            runs = list(pool.map(simulate_run, [config] * config.runs, indices))
    else:
        runs = [simulate_run(config, k) for k in indices]
    result = ExperimentResult(config, aggregate([r.z for r in runs]), runs)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    a = result.aggregate
    _write_csv(out / "aggregate.csv", ["t", "mean_z", "std_z", "min_z", "max_z", "frac_extinct"],
               zip(a.t, a.mean_z, a.std_z, a.min_z, a.max_z, a.frac_extinct))
    if cfg.outputs.trace_csv:
        for r in result.runs:
            _write_csv(out / f"run_{r.index}.csv", ["t", "z"], enumerate(r.z))
    if cfg.outputs.events_jsonl:
        with (out / "events.jsonl").open("w", newline="\n") as fh:
            for r in result.runs:
                for t, kind, walk, node in r.events:
                    fh.write(json.dumps({"run": r.index, "t": t, "kind": kind, "walk": walk, "node": node}) + "\n")
    if cfg.outputs.estimates:
        _write_csv(out / "estimates.csv", ["run", "t", "node", "z_hat"],
                   ((r.index, t, node, z) for r in result.runs for t, node, z in r.estimates or []))
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "theory.json").write_text(json.dumps(theory_summary(result), indent=2, sort_keys=True) + "\n")
    return out


def _mean_or_none(values) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def theory_summary(result: ExperimentResult) -> dict:
    """Fitted rates and the bounds that apply to this configuration."""
    from . import theory as th
    from .errors import BoundNotReached

    cfg = result.config
    pol = cfg.policy
    lam = _mean_or_none(r.lambda_hat for r in result.runs)
    mu = _mean_or_none(r.mu_hat for r in result.runs)
    out: dict = {
        "lambda_hat": lam,
        "mu_hat": mu,
        "t_mp": _mean_or_none(r.t_mp for r in result.runs),
        "flags": [
            "expected estimate convention: E[Z_hat] = Z'/2 (a limit statement of Z' also circulates; not used here)",
            "variance bounds use the CDF-integrated forked-walk variance; the printed closed form differs in sign",
        ],
    }
    z0 = cfg.z0
    if pol.kind in ("decafork", "decafork_plus") and z0 >= 2:
        delta_star = th.irwin_hall_cdf(z0 - 1, pol.gamma - 0.5)
        out["delta_star_implied"] = delta_star
        if 0.0 < delta_star < 0.5:
            out["designed_thresholds"] = list(th.design_thresholds(z0, delta_star))
    if lam is None or mu is None or pol.kind not in ("decafork", "decafork_plus"):
        return out
    params = th.TheoryParams(lam, mu, z0, pol.fork_prob, pol.gamma, pol.gamma_term, cfg.graph.n)
    steady = th.EventHistory(active_count=z0, now=0.0)
    fb = th.fork_prob_bound(steady, params)
    out["fork_prob_bound_steady"] = {"value": fb.value, "precondition_ok": fb.precondition_ok}
    if pol.gamma_term is not None:
        tb = th.term_prob_bound(steady, params)
        out["term_prob_bound_steady"] = {"value": tb.value, "precondition_ok": tb.precondition_ok}
    gb = th.growth_prob_bound(z0 + 2, cfg.horizon, params)
    out["growth_prob_bound"] = {"z_bound": z0 + 2, "t_total": cfg.horizon, "delta": gb.delta, "n_max": gb.n_max}
    if cfg.failures.bursts:
        _, k = cfg.failures.bursts[0]
        k = min(k, z0 - 1)
        try:
            rb = th.reaction_time_bound(k, 0, z0 - k, params, 0.05)
            out["reaction_time_bound"] = {"failed": k, "delta": 0.05, "steps": rb.steps, "eps": rb.eps}
        except BoundNotReached:
            out["reaction_time_bound"] = {"failed": k, "delta": 0.05, "steps": None}
    return out


# presets

def _base(policy: PolicyConfig, failures: FailurePlan, graph: Optional[GraphSpec] = None,
          runs: int = 50) -> ExperimentConfig:
    return ExperimentConfig(graph=graph or GraphSpec("random_regular", n=100, degree=8),
                            policy=policy, failures=failures, z0=policy.z0, runs=runs)


FIG1_T_MP = 1200
BYZ_SCHEDULE = [(2000, BYZ), (6000, NO_BYZ)]


def preset(name: str) -> dict[str, ExperimentConfig]:
    """Variant name -> configuration for one figure."""
    bursts = FailurePlan(bursts=BURSTS)
    decafork = PolicyConfig("decafork", gamma=2.0)
    plus = PolicyConfig("decafork_plus", gamma=3.25, gamma_term=5.75)
    if name == "fig1":
        return {
            "missing_person": _base(PolicyConfig("missing_person", t_mp=FIG1_T_MP), bursts),
            "decafork": _base(decafork, bursts),
            "decafork_plus": _base(plus, bursts),
        }
    if name == "fig2":
        out = {}
        for pf in (0.001, 0.0002):
            plan = FailurePlan(bursts=BURSTS, p_fail=pf)
            out[f"decafork_pf{pf:g}"] = _base(decafork, plan)
            out[f"decafork_plus_pf{pf:g}"] = _base(plus, plan)
        return out
    if name == "fig3":
        plan = FailurePlan(bursts=BURSTS, byzantine=ByzantineConfig(node=0, schedule_override=BYZ_SCHEDULE))
        return {
            "decafork_g2": _base(decafork, plan),
            "decafork_g3.25": _base(PolicyConfig("decafork", gamma=3.25), plan),
            "decafork_plus": _base(plus, plan),
        }
    if name == "fig4":
        return {f"n{n}_g{g:g}": _base(PolicyConfig("decafork", gamma=g), bursts,
                                      GraphSpec("random_regular", n=n, degree=8))
                for n, g in ((50, 1.85), (100, 2.0), (200, 2.1))}
    if name == "fig5":
        return {f"g{g:g}": _base(PolicyConfig("decafork", gamma=g), bursts) for g in (1.75, 2.0, 2.25, 2.5)}
    if name == "fig6":
        graphs = {
            "complete": GraphSpec("complete", n=100),
            "random_regular": GraphSpec("random_regular", n=100, degree=8),
            "erdos_renyi": GraphSpec("erdos_renyi", n=100, edge_prob=0.08),
            "power_law": GraphSpec("power_law", n=100, attachment=4),
        }
        return {f"{fam}_g{g:g}": _base(PolicyConfig("decafork", gamma=g), bursts, spec)
                for fam, spec in graphs.items() for g in (1.9, 2.0, 2.1)}
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def run_preset(name: str, out_dir, runs: Optional[int] = None, seed: Optional[int] = None,
               parallel: int = 1) -> dict[str, ExperimentResult]:
    results = {}
    for variant, cfg in preset(name).items():
        if runs is not None:
            cfg.runs = runs
        if seed is not None:
            cfg.seed = seed
        results[variant] = run_experiment(cfg, Path(out_dir) / variant, parallel)
    return results


# metrics

def recovery_time(mean_z: np.ndarray, event_t: int, level: float, window: int) -> int:
    """Steps after ``event_t`` until ``mean_z`` first reaches ``level``; ``window`` if it never does."""
    seg = np.asarray(mean_z[event_t + 1: event_t + 1 + window])
    hit = np.flatnonzero(seg >= level)
    return int(hit[0]) + 1 if hit.size else window


def steady_state_mean(mean_z: np.ndarray, start: int = 8000, stop: int = 10_000) -> float:
    return float(np.mean(mean_z[start: stop + 1]))


def extinct_runs(result: ExperimentResult) -> int:
    return sum(1 for r in result.runs if r.z.min() == 0)


def first_return_within(mean_z: np.ndarray, event_t: int, low: float, high: float) -> Optional[int]:
    """Steps after ``event_t`` until ``mean_z`` is back inside [low, high], or None."""
    seg = np.asarray(mean_z[event_t + 1:])
    hit = np.flatnonzero((seg >= low) & (seg <= high))
    return int(hit[0]) + 1 if hit.size else None
