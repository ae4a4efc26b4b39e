import csv
import json

import numpy as np
import pytest

from rwres import harness as H
from rwres.errors import ConfigError
from rwres.failures import FailurePlan
from rwres.graph import GraphSpec
from rwres.policies import PolicyConfig


def small(**kw):
    base = dict(graph=GraphSpec("random_regular", n=30, degree=4), policy=PolicyConfig("decafork", gamma=2.0),
                failures=FailurePlan(bursts=[(50, 3)]), horizon=200, runs=3, seed=11)
    base.update(kw)
    return H.ExperimentConfig(**base)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_roundtrip(tmp_path):
    cfg = small(outputs={"estimates": True})
    again = H.ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert H.ExperimentConfig.load(path) == cfg


def test_config_rejects():
    with pytest.raises(ConfigError):
        H.ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        small(runs=0)
    with pytest.raises(ConfigError):
        small(z0=8)
    with pytest.raises(ConfigError):
        small(seed=-1)


def test_resolve_seed(monkeypatch):
    monkeypatch.delenv(H.SEED_ENV, raising=False)
    assert H.resolve_seed(None) == 0
    monkeypatch.setenv(H.SEED_ENV, "42")
    assert H.resolve_seed(None) == 42 and H.resolve_seed(7) == 7
    monkeypatch.setenv(H.SEED_ENV, "x")
    with pytest.raises(ConfigError):
        H.resolve_seed(None)


def test_run_seeds_distinct():
    seen = {H.run_seeds(5, k) for k in range(50)}
    assert len(seen) == 50
    assert H.run_seeds(5, 3) == H.run_seeds(5, 3)


def test_single_run_has_zero_spread(tmp_path):
    res = H.run_experiment(small(runs=1), tmp_path)
    assert np.all(res.aggregate.std_z == 0)
    rows = read_csv(tmp_path / "aggregate.csv")
    assert len(rows) == 201
    assert rows[0]["t"] == "0" and rows[-1]["t"] == "200"


def test_outputs_written(tmp_path):
    H.run_experiment(small(outputs={"estimates": True}), tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"aggregate.csv", "run_0.csv", "run_2.csv", "events.jsonl", "estimates.csv",
            "config.json", "theory.json"} <= names
    est = read_csv(tmp_path / "estimates.csv")
    assert est and set(est[0]) == {"run", "t", "node", "z_hat"}
    events = [json.loads(l) for l in (tmp_path / "events.jsonl").read_text().splitlines()]
    assert sum(e["kind"] == "burst_fail" for e in events) == 9
    theory = json.loads((tmp_path / "theory.json").read_text())
    assert isinstance(theory, dict) and theory


def test_outputs_can_be_disabled(tmp_path):
    H.run_experiment(small(outputs={"trace_csv": False, "events_jsonl": False}), tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert "run_0.csv" not in names and "events.jsonl" not in names and "estimates.csv" not in names


def test_aggregate_matches_run_files(tmp_path):
    cfg = small(runs=4)
    H.run_experiment(cfg, tmp_path)
    z = np.array([[int(r["z"]) for r in read_csv(tmp_path / f"run_{k}.csv")] for k in range(4)], dtype=float)
    agg = read_csv(tmp_path / "aggregate.csv")
    col = lambda name: np.array([float(r[name]) for r in agg])
    assert np.array_equal(col("mean_z"), z.mean(0))
    assert np.array_equal(col("std_z"), z.std(0))
    assert np.array_equal(col("min_z"), z.min(0)) and np.array_equal(col("max_z"), z.max(0))
    assert np.array_equal(col("frac_extinct"), (z == 0).mean(0))


def test_byte_identical_reruns(tmp_path):
    H.run_experiment(small(), tmp_path / "a")
    H.run_experiment(small(), tmp_path / "b")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_parallel_equals_serial(tmp_path):
    H.run_experiment(small(runs=4), tmp_path / "s")
    H.run_experiment(small(runs=4), tmp_path / "p", parallel=3)
    for p in (tmp_path / "s").iterdir():
        assert p.read_bytes() == (tmp_path / "p" / p.name).read_bytes(), p.name


def test_seed_changes_output():
    a = H.run_experiment(small(seed=1))
    b = H.run_experiment(small(seed=2))
    assert any(not np.array_equal(x.z, y.z) for x, y in zip(a.runs, b.runs))


def test_fixed_graph_shares_instance():
    cfg = small(policy=PolicyConfig("none"), failures=FailurePlan(), fixed_graph=True)
    res = H.run_experiment(cfg)
    assert len({r.lambda_hat for r in res.runs}) == 3  # different walks
    # same graph: the spectral input is identical, checked through the seed plumbing
    g0, _ = H.run_seeds(cfg.seed, 0)
    assert all(H.run_seeds(cfg.seed, 0 if cfg.fixed_graph else k)[0] == g0 for k in range(3))


def test_extinction_is_absorbing():
    cfg = small(policy=PolicyConfig("none"), failures=FailurePlan(bursts=[(20, 10)]), runs=2)
    res = H.run_experiment(cfg)
    for r in res.runs:
        assert r.z[20] == 0 and np.all(r.z[20:] == 0)
    assert H.extinct_runs(res) == 2


def test_rates_fitted():
    res = H.run_experiment(small(runs=1, horizon=500))
    r = res.runs[0]
    assert r.lambda_hat > 0 and r.mu_hat > 0


def test_metrics():
    z = np.array([10, 10, 5, 6, 8, 10, 11, 10], dtype=float)
    assert H.recovery_time(z, 1, 10, 5) == 4
    assert H.recovery_time(z, 1, 12, 3) == 3
    assert H.first_return_within(z, 1, 9, 10.5) == 4
    assert H.first_return_within(z, 1, 20, 30) is None
    assert H.steady_state_mean(np.arange(11.0), 5, 10) == 7.5


@pytest.mark.parametrize("name", H.PRESETS)
def test_presets_build(name):
    variants = H.preset(name)
    assert variants
    for cfg in variants.values():
        assert cfg.horizon == 10_000 and cfg.z0 == cfg.policy.z0
        H.ExperimentConfig.from_dict(cfg.to_dict())
    with pytest.raises(ConfigError):
        H.preset("fig9")


def test_run_preset_small(tmp_path, monkeypatch):
    def tiny(name):
        return {"a": small(runs=1, horizon=50), "b": small(runs=1, horizon=60)}
    monkeypatch.setattr(H, "preset", tiny)
    res = H.run_preset("fig1", tmp_path, runs=2, seed=3)
    assert set(res) == {"a", "b"}
    assert all(r.config.runs == 2 and r.config.seed == 3 for r in res.values())
    assert (tmp_path / "a" / "aggregate.csv").exists() and (tmp_path / "b" / "aggregate.csv").exists()
