# fracgame/suites/viscosity.py
"""V± sign checks of the tree value against μ_ε test functionals, plus the boundary condition."""
from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial

from fracgame.calculus.testfunc import TestFunctional
from fracgame.core.config import ScenarioConfig
from fracgame.core.reports import GRADE_INFO, CheckReport
from fracgame.game.viscosity import CandidateFunctional, boundary_residual, vminus_check, vplus_check
from fracgame.suites.common import Trial, TrialResult, library, node_times, nu_params, scenario_dynamics

TRACE_HEADER = ["anchor", "weight", "check", "t", "lhs", "rhs", "margin"]

ANCHORS = 3


def _boundary(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        paths = library(cfg, dyn, rng)
        reports = []
        for phi in (CandidateFunctional.value_tree(dyn, cfg.decision_k, "upper"),
                    CandidateFunctional.value_tree(dyn, cfg.decision_k, "lower"),
                    CandidateFunctional.frozen_sigma(dyn)):
            res = boundary_residual(phi, dyn.sigma, paths)
            reports.append(CheckReport.inequality("viscosity_boundary",
                                                  {"phi": phi.name, "paths": len(paths)}, res, 0.0, 1e-12))
        return TrialResult(reports)
    return run


def _sign_checks(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        paths = library(cfg, dyn, rng)
        times = node_times(cfg)
        points = [(t, x) for t in times for x in paths]
        phi = CandidateFunctional.value_tree(dyn, cfg.decision_k)
        pe = nu_params(cfg, cfg.harness.eps[0])
        reports: list[CheckReport] = []
        trace: list[list] = []
        for a in range(ANCHORS):
            anchor = paths[int(rng.integers(len(paths)))]
            anchor_t = float(times[int(rng.integers(len(times) - 1))])
            slope = float(rng.normal())
            for weight in (1.0 / pe.eps, -1.0 / pe.eps):
                psi = TestFunctional(pe, anchor_t, anchor, Polynomial([0.0, slope]), weight)
                # library extrema of φ − ψ are not local extrema, so the verdict is diagnostic
                for rep in (vplus_check(phi, psi, dyn, points, grade=GRADE_INFO),
                            vminus_check(phi, psi, dyn, points, grade=GRADE_INFO)):
                    reports.append(rep)
                    trace.append([a, weight, rep.check, rep.inputs["t"], rep.lhs, rep.rhs, rep.margin])
        return TrialResult(reports, trace, {"evaluations": phi.evaluations, "points": len(points),
                                            "eps": pe.eps})
    return run


def trials(cfg: ScenarioConfig) -> list[Trial]:
    return [Trial("boundary", _boundary(cfg)), Trial("sign_checks", _sign_checks(cfg))]
