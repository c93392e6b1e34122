# fracgame/suites/common.py
"""Trial plumbing shared by the suites: result type, scenario grid, dynamics, path library."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from fracgame.calculus.fraccalc import Grid
from fracgame.calculus.paths import SampledPath, path_library, random_path
from fracgame.calculus.testfunc import NuParams
from fracgame.core.config import ScenarioConfig, build_scenario_dynamics
from fracgame.core.reports import CheckReport
from fracgame.game.dynamics import GameDynamics


@dataclass
class TrialResult:
    reports: list[CheckReport] = field(default_factory=list)
    trace: list[list[Any]] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Trial:
    name: str
    run: Callable[[np.random.Generator], TrialResult]


def scenario_grid(cfg: ScenarioConfig, n: int | None = None) -> Grid:
    return Grid.uniform(cfg.fine_n if n is None else int(n), cfg.T)


def scenario_dynamics(cfg: ScenarioConfig) -> GameDynamics:
    return build_scenario_dynamics(cfg.dynamics)


def node_times(cfg: ScenarioConfig) -> list[float]:
    """library.times evenly spaced grid nodes, 0 and T included."""
    grid = scenario_grid(cfg)
    stride = cfg.fine_n // (cfg.library.times - 1)
    return [float(grid.nodes[i * stride]) for i in range(cfg.library.times)]


def raw_paths(cfg: ScenarioConfig, dyn: GameDynamics, rng: np.random.Generator,
              grid: Grid | None = None) -> list[SampledPath]:
    grid = scenario_grid(cfg) if grid is None else grid
    lib = cfg.library
    return [random_path(rng, grid, cfg.alpha, dyn.n, lib.k, dyn.c_star,
                        blocks=lib.blocks, amplitude=lib.amplitude)
            for _ in range(lib.paths)]


def library(cfg: ScenarioConfig, dyn: GameDynamics, rng: np.random.Generator) -> list[SampledPath]:
    """Random X_k paths closed under freeze at the scenario node times."""
    return path_library(raw_paths(cfg, dyn, rng), node_times(cfg))


def nu_params(cfg: ScenarioConfig, eps: float) -> NuParams:
    return NuParams(float(eps), cfg.alpha, cfg.beta, cfg.T)
