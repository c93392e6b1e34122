import asyncio
import json

import pytest

from fracgame import app
from fracgame.core.config import load_scenario_config
from fracgame.core.dispatcher import Dispatcher
from fracgame.core.errors import ConfigError


def _run(subcommand, config, out, *extra):
    return app.run([subcommand, "--config", str(config), "--out", str(out), *extra])


def test_lemmas_suite_passes(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert _run("lemmas", scenario_file(), out) == 0
    lines = (out / "reports.jsonl").read_text().splitlines()
    assert len(lines) >= 250
    summary = json.loads((out / "summary.json").read_text())
    assert summary["subcommand"] == "lemmas"
    assert summary["failures"] == 0
    assert "out_dir" not in summary["scenario"]
    assert (out / "trace.csv").read_text().startswith("series,eps,delta,error,residual_ratio")


def test_unknown_key_exits_2(scenario_file, tmp_path, capsys):
    assert _run("validate", scenario_file({"alpah": 0.5}), tmp_path / "out") == 2
    assert "unknown key 'alpah'" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_violated_growth_exits_1(scenario_file, tmp_path, capsys):
    path = scenario_file({"dynamics": {"c_star": 0.1}})
    assert _run("validate", path, tmp_path / "out") == 1
    assert "FAIL assumption_growth" in capsys.readouterr().out


def test_divergence_exits_3(scenario_file, tmp_path):
    path = scenario_file({"dynamics": {"catalog": "linear_scalar", "params": {"a": 200.0}}})
    assert _run("simulate", path, tmp_path / "out") == 3


def test_outputs_do_not_depend_on_worker_count(scenario_file, tmp_path):
    path = scenario_file()
    one, three = tmp_path / "w1", tmp_path / "w3"
    assert _run("lemmas", path, one, "--workers", "1") == 0
    assert _run("lemmas", path, three, "--workers", "3") == 0
    for name in ("reports.jsonl", "summary.json", "trace.csv"):
        assert (one / name).read_bytes() == (three / name).read_bytes()


def test_seed_changes_the_draws(scenario_file, tmp_path):
    path = scenario_file()
    assert _run("validate", path, tmp_path / "a", "--seed", "1") == 0
    assert _run("validate", path, tmp_path / "b", "--seed", "2") == 0
    assert (tmp_path / "a" / "reports.jsonl").read_bytes() != (tmp_path / "b" / "reports.jsonl").read_bytes()


@pytest.mark.parametrize("subcommand", ["validate", "simulate", "value", "viscosity", "doubling"])
def test_suites_pass_on_the_small_scenario(scenario_file, tmp_path, subcommand):
    out = tmp_path / subcommand
    assert _run(subcommand, scenario_file(), out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reports"] > 0
    assert summary["trials"]


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        app.run(["bogus"])


def test_dispatcher_plan_and_errors(scenario_file):
    cfg = load_scenario_config(scenario_file())
    d = Dispatcher(cfg, workers=2)
    assert [t.name for t in d.plan("value")] == ["tree_0", "tree_1", "tree_2", "lipschitz", "minimax"]
    assert [t.name for t in d.plan("lemmas")][-2:] == ["constants", "fd"]
    with pytest.raises(ConfigError):
        d.plan("nope")
    with pytest.raises(ConfigError):
        Dispatcher(cfg, workers=0)
    outcome = asyncio.run(d.run("validate"))
    assert outcome.trials == ["assumptions", "quadrature", "paths"]
    assert outcome.failures == 0
    assert set(outcome.details) == {"assumptions"}
