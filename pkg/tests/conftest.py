import json

import numpy as np
import pytest

from fracgame.calculus.fraccalc import Grid
from fracgame.calculus.paths import random_path
from fracgame.game.dynamics import build_dynamics


@pytest.fixture
def rng():
    return np.random.default_rng(20251019)


@pytest.fixture
def grid():
    return Grid.uniform(64, 1.0)


@pytest.fixture
def pursuit():
    return build_dynamics("pursuit_1d", {}, [[-1.0], [1.0]], [[-1.0], [1.0]], 2.0)


@pytest.fixture
def idle():
    """f ≡ 0, χ ≡ 0, σ = x(T)."""
    return build_dynamics("linear_scalar", {}, [[-1.0], [1.0]], [[-1.0], [1.0]], 1.0)


@pytest.fixture
def paths(rng, grid):
    return [random_path(rng, grid, 0.5, 1, 2, 2.0, blocks=4) for _ in range(4)]


SMALL_SCENARIO = {
    "name": "small",
    "T": 1.0,
    "alpha": 0.5,
    "grid": {"fine_n": 32, "decision_k": 2},
    "dynamics": {"catalog": "pursuit_1d", "P": [-1.0, 1.0], "Q": [-1.0, 1.0]},
    "library": {"paths": 3, "k": 2, "blocks": 4, "times": 5},
    "harness": {"trials": 10, "fd_deltas": [4, 8, 16], "samples": 16, "simulate_n": [64, 128]},
    "seed": 11,
}


@pytest.fixture
def scenario_file(tmp_path):
    """Writes SMALL_SCENARIO with nested overrides applied and returns its path."""
    def _write(overrides=None, name="scenario.json"):
        data = json.loads(json.dumps(SMALL_SCENARIO))
        for key, val in (overrides or {}).items():
            if isinstance(val, dict) and isinstance(data.get(key), dict):
                data[key].update(val)
            else:
                data[key] = val
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return path
    return _write
