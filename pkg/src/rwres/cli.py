"""Command-line entry point: ``rwres simulate | preset | theory``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from . import theory as th
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _json_arg(text: str):
    """Inline JSON, ``@file`` or ``-`` for stdin."""
    if text == "-":
        text = sys.stdin.read()
    elif text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc


def _emit(value) -> None:
    if isinstance(value, float):
        print(repr(value))
    elif isinstance(value, int):
        print(value)
    else:
        print(json.dumps(value, indent=2))


def _params(a) -> th.TheoryParams:
    return th.TheoryParams(a.lam, a.mu, a.z0, a.p, a.gamma, a.gamma_term, a.n)


def _history(a) -> th.EventHistory:
    return th.EventHistory.from_dict(_json_arg(a.history))


def _rate_flags(p, need_mu=True):
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="return rate")
    if need_mu:
        p.add_argument("--mu", type=float, required=True, help="hitting rate")


def _param_flags(p):
    _rate_flags(p)
    p.add_argument("--z0", type=int, default=10)
    p.add_argument("--p", type=float, default=None, help="fork probability (default 1/z0)")
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--gamma-term", type=float, default=None)
    p.add_argument("--n", type=int, default=100, help="node count")


def _forked_flags(p):
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--tau-f", type=float, required=True)
    p.add_argument("--tau-t", type=float, required=True)
    _rate_flags(p)


def _theory(sub):
    tp = sub.add_parser("theory", help="evaluate closed-form laws and bounds")
    ts = tp.add_subparsers(dest="op", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = ts.add_parser(name, help=help_)
        p.set_defaults(theory_fn=fn)
        return p

    p = add("irwin-hall", lambda a: th.irwin_hall_cdf(a.m, a.sigma), "CDF of a sum of m uniforms")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)

    p = add("scaled-failed", lambda a: th.scaled_failed_cdf(a.k, a.sigma, a.lam, a.elapsed),
            "CDF of the summed survival of k failed walks")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--elapsed", type=float, required=True)
    _rate_flags(p, need_mu=False)

    p = add("design", lambda a: dict(zip(("gamma", "gamma_term"), th.design_thresholds(a.z0, a.delta))),
            "fork/termination thresholds for a false-trigger level")
    p.add_argument("--z0", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = add("forked-cdf", lambda a: th.forked_cdf(a.x, a.t, a.tau_f, a.tau_t, a.lam, a.mu),
            "CDF of a forked walk's survival value")
    p.add_argument("--x", type=float, required=True)
    _forked_flags(p)

    p = add("forked-mean", lambda a: th.forked_mean(a.t, a.tau_f, a.tau_t, a.lam, a.mu),
            "mean of a forked walk's survival value")
    _forked_flags(p)

    def forked_var(a):
        fn = th.forked_var_integrated if a.integrated else th.forked_var
        return fn(a.t, a.tau_f, a.tau_t, a.lam, a.mu)

    p = add("forked-var", forked_var, "variance of a forked walk's survival value (printed closed form)")
    _forked_flags(p)
    p.add_argument("--integrated", action="store_true", help="use the CDF-integrated variance instead")

    hist_help = 'history JSON: {"active_count":..,"terminations":[[tau,k]],"forks":[[tau,k]],"now":t}; @file or -'

    def expected(a):
        return {"expected_estimate": th.expected_estimate(_history(a), _params(a)),
                "flag": "convention E[Z_hat] = Z'/2 (a limit statement of Z' also circulates; not used here)"}

    p = add("expected-estimate", expected, "mean of the node estimate")
    p.add_argument("--history", required=True, help=hist_help)
    _param_flags(p)

    p = add("estimate-variance", lambda a: th.estimate_variance(_history(a), _params(a), a.method),
            "variance of the node estimate")
    p.add_argument("--history", required=True, help=hist_help)
    p.add_argument("--method", choices=th.estimator.VAR_METHODS, default="integrated")
    _param_flags(p)

    for name, fn in (("fork-bound", th.fork_prob_bound), ("term-bound", th.term_prob_bound)):
        p = add(name, lambda a, fn=fn: fn(_history(a), _params(a), a.method)._asdict(),
                f"Bennett bound on the per-visit {name.split('-')[0]} probability")
        p.add_argument("--history", required=True, help=hist_help)
        p.add_argument("--method", choices=th.estimator.VAR_METHODS, default="integrated")
        _param_flags(p)

    p = add("pfork-plus", lambda a: th.pfork_plus(a.i, _params(a)), "per-step fork bound with i walks")
    p.add_argument("--i", type=int, required=True)
    _param_flags(p)

    def reaction(a):
        grid = a.eps_grid
        if a.chain:
            total, parts = th.reaction_time_chain(a.k, a.chain, a.z_active, _params(a), a.delta, grid)
            return {"steps": total, "parts": [p._asdict() for p in parts]}
        return th.reaction_time_bound(a.k, a.r, a.z_active, _params(a), a.delta, grid)._asdict()

    p = add("reaction-time", reaction, "steps until a fork after k failures")
    p.add_argument("--k", type=int, required=True, help="failed walks")
    p.add_argument("--r", type=int, default=0, help="forks already done")
    p.add_argument("--z-active", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--chain", type=int, default=0, help="recoveries to chain (splits delta evenly)")
    p.add_argument("--eps-grid", type=float, nargs="+", default=None)
    _param_flags(p)

    p = add("growth", lambda a: th.growth_prob_bound(a.z, a.t_total, _params(a))._asdict(),
            "probability bound on exceeding z walks by t-total")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--t-total", type=float, required=True)
    _param_flags(p)

    p = add("growth-time", lambda a: th.growth_time_bound(a.delta, a.z, _params(a)),
            "horizon for which the growth bound stays below delta")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    _param_flags(p)

    p = add("overshoot-approx",
            lambda a: th.overshoot_approx(a.z, a.tau_t, a.t_first_fork, a.horizon, _params(a), a.failed)._asdict(),
            "approximate expected-count series after the first fork")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--tau-t", type=float, default=None)
    p.add_argument("--t-first-fork", type=float, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--failed", type=int, default=None)
    _param_flags(p)

    def exact(a):
        raw = _json_arg(a.thresholds) if a.thresholds else None
        thresholds = {tuple(int(c) for c in k if c in "01"): v for k, v in raw.items()} if raw else None
        return th.overshoot_exact(a.z, a.t_first_fork, a.depth, _params(a), thresholds, a.tau_t, a.failed)

    p = add("overshoot-exact", exact, "path-enumeration bound on the expected count")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--t-first-fork", type=float, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--thresholds", default=None, help='JSON {"": 12, "0": 14, "1": 15, ...} keyed by prefix bits')
    p.add_argument("--tau-t", type=float, default=None)
    p.add_argument("--failed", type=int, default=None)
    _param_flags(p)

    def rates(a):
        import numpy as np

        from .graph import GraphSpec, generate

        g = generate(GraphSpec(a.family, n=a.n, degree=a.degree, edge_prob=a.edge_prob,
                               attachment=a.attachment, seed=a.seed))
        lam = th.spectral_return_rates(g)
        hits = th.sample_hitting_times(g, a.samples, np.random.default_rng(a.seed))
        return {"spectral_lambda_mean": float(lam.mean()), "spectral_lambda_min": float(lam.min()),
                "spectral_lambda_max": float(lam.max()), "mu_hat": th.fit_rate(hits)}

    p = add("rates", rates, "spectral return rates and a Monte Carlo hitting rate for a graph")
    p.add_argument("--family", default="random_regular")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--edge-prob", type=float, default=0.1)
    p.add_argument("--attachment", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rwres", description="Self-regulating random walk simulator and theory toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help=f"overrides the config; falls back to ${harness.SEED_ENV}")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--fixed-graph", action="store_true", help="use one graph instance for all runs")

    p = sub.add_parser("preset", help="run a figure preset (one subdirectory per variant)")
    p.add_argument("name", choices=harness.PRESETS)
    p.add_argument("--out", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--parallel", type=int, default=1)

    _theory(sub)
    return parser


def _simulate(a) -> None:
    data = _json_arg("@" + a.config)
    if a.runs is not None:
        data["runs"] = a.runs
    if a.seed is not None or "seed" not in data:
        # explicit flag first, then the config file, then the environment
        data["seed"] = harness.resolve_seed(a.seed)
    if a.fixed_graph:
        data["fixed_graph"] = True
    cfg = harness.ExperimentConfig.from_dict(data)
    res = harness.run_experiment(cfg, a.out, a.parallel)
    print(f"wrote {a.out} ({cfg.runs} runs, final mean Z = {res.aggregate.mean_z[-1]:.3f})")


def _preset(a) -> None:
    seed = a.seed
    if seed is None and os.environ.get(harness.SEED_ENV) is not None:
        seed = harness.resolve_seed(None)
    results = harness.run_preset(a.name, a.out, a.runs, seed, a.parallel)
    for variant in results:
        print(Path(a.out) / variant / "aggregate.csv")


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        if a.command == "simulate":
            _simulate(a)
        elif a.command == "preset":
            _preset(a)
        else:
            _emit(a.theory_fn(a))
    except ConfigError as exc:
        print(f"rwres: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, OSError, ValueError, OverflowError) as exc:
        print(f"rwres: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
