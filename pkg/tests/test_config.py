import json
from pathlib import Path

import pytest

from fracgame.core.config import build_scenario_dynamics, load_scenario_config, parse_scenario
from fracgame.core.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parents[1] / "fracgame" / "config"

MINIMAL = {"T": 1.0, "alpha": 0.5, "grid": {"fine_n": 32, "decision_k": 2},
           "dynamics": {"catalog": "pursuit_1d"}}


def _text(**changes):
    data = json.loads(json.dumps(MINIMAL))
    data.update(changes)
    return json.dumps(data, indent=2)


@pytest.mark.parametrize("name", ["default.json", "linear_scalar.json", "decoupled_2d.json"])
def test_shipped_scenarios_load(name):
    cfg = load_scenario_config(CONFIG_DIR / name)
    assert cfg.source == name
    build_scenario_dynamics(cfg.dynamics)


def test_default_scenario_values():
    cfg = load_scenario_config(CONFIG_DIR / "default.json")
    assert cfg.alpha == 0.5
    assert cfg.beta == 0.125
    assert cfg.theta == 0.25
    assert cfg.fine_n == 512
    assert cfg.harness.eps == (0.1, 0.01, 0.001)
    assert max(cfg.harness.fd_deltas) == 512
    assert cfg.fd_n == 2048


def test_unknown_key_reports_its_line():
    text = '{\n  "T": 1.0,\n  "alpah": 0.5\n}\n'
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text, "typo.json")
    assert exc.value.line == 3
    assert str(exc.value) == "typo.json:3: unknown key 'alpah'"


def test_nested_unknown_key():
    text = _text(grid={"fine_n": 32, "decision_k": 2, "coarse": 4})
    with pytest.raises(ConfigError, match="unknown key 'grid.coarse'"):
        parse_scenario(text)


def test_missing_required_key():
    data = dict(MINIMAL)
    data.pop("grid")
    with pytest.raises(ConfigError, match="missing required key 'grid.fine_n'"):
        parse_scenario(json.dumps(data))


@pytest.mark.parametrize("changes", [
    {"alpha": 1.2},
    {"alpha": 0.0},
    {"beta": 0.3},
    {"T": -1.0},
    {"grid": {"fine_n": 32, "decision_k": 64}},
    {"grid": {"fine_n": 32.5, "decision_k": 2}},
    {"grid": {"fine_n": 32, "decision_k": 12}},
    {"dynamics": {"catalog": "nope"}},
    {"dynamics": {"catalog": "pursuit_1d", "c_star": 0}},
    {"library": {"times": 4}},
    {"library": {"amplitude": 1.5}},
    {"harness": {"fd_deltas": [3]}},
    {"harness": {"fd_deltas": [0]}},
    {"harness": {"fd_deltas": []}},
    {"harness": {"fd_deltas": [3, 16]}},
    {"harness": {"eps": []}},
    {"harness": {"theta": 1.0}},
    {"seed": -1},
    {"out": ""},
])
def test_invalid_values(changes):
    with pytest.raises(ConfigError):
        parse_scenario(_text(**changes))


def test_parse_error_has_a_line():
    with pytest.raises(ConfigError) as exc:
        parse_scenario('{\n  "T": 1.0,\n  "alpha": [\n}\n', "broken.json")
    assert exc.value.line is not None


def test_defaults_and_derived_dynamics():
    cfg = parse_scenario(_text(), "minimal.json")
    assert cfg.name == "minimal"
    assert cfg.beta == pytest.approx(0.125)
    assert cfg.seed == 0
    dyn = build_scenario_dynamics(cfg.dynamics)
    assert dyn.P.tolist() == [[-1.0], [1.0]]
    assert dyn.c_star == pytest.approx(2.0)
    assert cfg.fd_n == 4 * 512
    small = parse_scenario(_text(harness={"fd_deltas": [4, 8]}))
    assert small.fd_n == 32


def test_overrides_and_digest():
    cfg = parse_scenario(_text())
    moved = cfg.with_overrides(out="elsewhere")
    assert moved.out_dir == "elsewhere"
    assert moved.digest == cfg.digest
    reseeded = cfg.with_overrides(seed=2 ** 64 - 1)
    assert reseeded.seed == 2 ** 64 - 1
    assert reseeded.digest != cfg.digest
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=-3)
    assert cfg.with_overrides() is cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        load_scenario_config(tmp_path / "absent.json")
