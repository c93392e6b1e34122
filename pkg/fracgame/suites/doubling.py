# fracgame/suites/doubling.py
"""Doubling-of-variables diagnostic on the tree value and perturbations of it."""
from __future__ import annotations

import numpy as np

from fracgame.core.config import ScenarioConfig
from fracgame.game.viscosity import CandidateFunctional, doubling_diagnostic
from fracgame.suites.common import Trial, TrialResult, library, node_times, nu_params, scenario_dynamics

TRACE_HEADER = ["pair", "eps", "t", "path", "phi_max"]

SCALE = 1e-3
SHIFT = 1e-2


def _pair(cfg: ScenarioConfig, name: str):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        paths = library(cfg, dyn, rng)
        phi = CandidateFunctional.value_tree(dyn, cfg.decision_k)
        if name == "identical":
            phi1, phi2 = phi, phi
        elif name == "scaled":
            phi1, phi2 = phi, phi.scaled(1.0 + SCALE)
        else:
            phi1, phi2 = phi.scaled(1.0, SHIFT), phi
        report = doubling_diagnostic(phi1, phi2, dyn, nu_params(cfg, cfg.harness.eps[0]), cfg.harness.eps,
                                     paths, node_times(cfg))
        trace = [[name] + row for row in report.trace]
        return TrialResult(report.checks(), trace, report.to_dict())
    return run


def trials(cfg: ScenarioConfig) -> list[Trial]:
    return [Trial(name, _pair(cfg, name)) for name in ("identical", "scaled", "shifted")]
