import json

import numpy as np
import pytest
from click.testing import CliRunner

from artifact.cli import main
from artifact.harness import (
    REGISTRY_NAMES,
    ConfigError,
    empirical_lipschitz,
    make_function,
    run_experiment,
    run_pipeline,
    sup_error,
    write_outputs,
)
from artifact.space import SpaceConfig

BOX = SpaceConfig.cube(2, 1.0)


@pytest.mark.parametrize("name", REGISTRY_NAMES)
def test_registry_lipschitz_constants(name):
    f = make_function(name, 2, seed=3)
    lip = empirical_lipschitz(f, SpaceConfig.cube(2, 3.0), 5000, 1)
    assert lip <= f.exact_lip * (1 + 1e-9)
    assert lip >= 0.9 * f.exact_lip


def test_registry_rejects_unknown_names_and_parameters():
    with pytest.raises(ConfigError):
        make_function("nope", 2)
    with pytest.raises(ConfigError):
        make_function("norm", 2, {"point": [0, 0]})


def test_empirical_lipschitz_of_norm():
    assert empirical_lipschitz(lambda X: np.linalg.norm(X, axis=1), BOX, 10000, 0) >= 0.99


def test_empirical_lipschitz_is_a_lower_bound(rng):
    G = rng.normal(size=2)
    lip = empirical_lipschitz(lambda X: X @ G, BOX, 2000, 0)
    assert lip == pytest.approx(np.linalg.norm(G), rel=1e-6)
    assert lip <= np.linalg.norm(G) * (1 + 1e-12)


def test_sup_error_refinement_bound():
    f = lambda X: np.abs(X[:, 0]) + X[:, 1]
    g = lambda X: np.abs(X[:, 0] - 0.013) + X[:, 1]
    coarse = sup_error(f, g, BOX, 0.05)
    fine = sup_error(f, g, BOX, 0.005)
    # |f - g| is 2-Lipschitz, so grid sups differ by at most 2 h
    assert abs(fine - coarse) <= 2 * 0.05
    assert fine == pytest.approx(0.013, abs=1e-12)


def test_unknown_config_keys_raise():
    with pytest.raises(ConfigError):
        run_pipeline("lasry-lions", {"bogus": 1})
    with pytest.raises(ConfigError):
        run_pipeline("lasry-lions", {"h": "fine"})
    with pytest.raises(ConfigError):
        run_pipeline("no-such-pipeline", {})
    with pytest.raises(ConfigError):
        run_pipeline("lasry-lions", {}, seed=-1)


def test_precondition_failures_are_recorded():
    rep = run_pipeline("hilbert-e2e", {"h": 0.1})
    assert not rep.passed
    assert "mu/10" in rep.error


def test_report_is_deterministic(tmp_path):
    a = run_pipeline("tube-check", {"samples": 20, "sandwich": 30, "roundtrip": 50, "injectivity_pairs": 50}, seed=7)
    b = run_pipeline("tube-check", {"samples": 20, "sandwich": 30, "roundtrip": 50, "injectivity_pairs": 50}, seed=7)
    assert a.to_json() == b.to_json()
    write_outputs(a, tmp_path / "a")
    write_outputs(b, tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    header = (tmp_path / "a" / "metrics.csv").read_text().splitlines()[0]
    assert header == "stage,metric,value,bound,pass"
    assert "total_seconds" in json.loads((tmp_path / "a" / "timings.json").read_text())


def test_run_experiment_from_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pipeline": "lasry-lions", "h": 0.002}))
    rep = run_experiment(cfg, tmp_path / "out", seed=1)
    assert rep.passed
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert data["config"]["h"] == 0.002 and data["seed"] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        run_experiment(bad)


def test_hilbert_end_to_end_report():
    rep = run_pipeline("hilbert-e2e", {})
    checks = {m.metric: m for m in rep.metrics}
    assert rep.passed, rep.to_json()
    assert checks["probe_sup_error"].value <= 0.1
    assert checks["empirical_lip"].value <= 1.1


def test_glued_hilbert_in_one_dimension():
    rep = run_pipeline(
        "hilbert-e2e",
        {"dimension": 1, "half_width": 1.0, "params": {"point": [0.2]}, "glue": True, "probes": 300, "h": 0.0025},
    )
    assert rep.passed, rep.to_json()


def test_cli_pipeline_and_report(tmp_path):
    runner = CliRunner()
    out = tmp_path / "run"
    res = runner.invoke(main, ["lasry-lions", "--out", str(out), "--seed", "3"])
    assert res.exit_code == 0, res.output
    assert "PASS" in res.output and "passed" in res.output
    assert (out / "metrics.csv").exists()
    res = runner.invoke(main, ["report", "--out", str(out)])
    assert res.exit_code == 0
    assert "seed 3" in res.output


def test_cli_exit_codes(tmp_path):
    runner = CliRunner()
    assert runner.invoke(main, ["tube-check", "--grid-h", "0.1"]).exit_code == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"unknown": 1}))
    assert runner.invoke(main, ["lasry-lions", "--config", str(cfg)]).exit_code == 2
    cfg.write_text(json.dumps({"pipeline": "crowns"}))
    assert runner.invoke(main, ["lasry-lions", "--config", str(cfg)]).exit_code == 2
    # the Huber reference values assume lam = 0.2, so another lam fails those checks
    cfg.write_text(json.dumps({"lam": 0.05, "mu": 0.02}))
    res = runner.invoke(main, ["lasry-lions", "--config", str(cfg)])
    assert res.exit_code == 1, res.output
    assert "FAIL  lasry_lions.huber_at_0.1" in res.output
