# fracgame/suites/value.py
"""Game values on scenario trees: bracket, DPP, boundary, non-anticipativity, (L) and (M±) witnesses."""
from __future__ import annotations

import math

import numpy as np

from fracgame.calculus.paths import SampledPath, extend, freeze, ystar_check
from fracgame.core.config import ScenarioConfig
from fracgame.core.reports import CheckReport
from fracgame.game import tree
from fracgame.game.dynamics import GameDynamics, hamiltonian
from fracgame.game.viscosity import CandidateFunctional, lipschitz_L_check
from fracgame.suites.common import Trial, TrialResult, node_times, raw_paths, scenario_dynamics

TRACE_HEADER = ["base", "t", "witness", "node", "time", "state0"]

TREE_PATHS = 3
LIPSCHITZ_PATHS = 4


def decisions_left(cfg: ScenarioConfig, base: SampledPath, t: float) -> int:
    """Decision steps between t and T at spacing T/K."""
    R = base.grid.N - base.grid.index_of(t)
    return min(R, math.ceil(cfg.decision_k * R / base.grid.N))


def _trivial(dyn: GameDynamics) -> bool:
    """f ≡ 0 and χ ≡ 0."""
    f_zero = not (np.any(dyn.a) or np.any(dyn.f0) or np.any(dyn.P * dyn.b) or np.any(dyn.Q * dyn.c))
    chi_zero = not (np.any(dyn.d) or np.any(dyn.P @ dyn.e_u) or np.any(dyn.Q @ dyn.e_v) or dyn.chi0)
    return f_zero and chi_zero


def _tree_checks(cfg: ScenarioConfig, j: int):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        base = raw_paths(cfg, dyn, rng)[j]
        reports: list[CheckReport] = []
        trace: list[list] = []
        trees: dict[str, dict] = {}
        for t in node_times(cfg):
            K = decisions_left(cfg, base, t)
            vt = tree.value(dyn, base, t, K)
            tag = {"base": base.digest[:12], "t": t, "K": K, "leaves": vt.leaves}
            reports.append(CheckReport.inequality("value_bracket", tag, vt.lower_value, vt.upper_value,
                                                  1e-12 * (1.0 + abs(vt.upper_value))))
            if dyn.affine_payoff:
                reports.append(CheckReport.equality("value_isaacs_equality", tag, vt.upper_value,
                                                    vt.lower_value, 1e-9))
            else:
                reports.append(CheckReport.info("value_isaacs_equality", tag, vt.upper_value, vt.lower_value,
                                                note="payoff not affine in the controls: tree bracket only"))
            if K == 0:
                reports.append(CheckReport.equality("value_boundary", tag, vt.upper_value,
                                                    dyn.sigma(base), 1e-12))
            else:
                reports.append(CheckReport.inequality("value_dpp_residual", tag,
                                                      tree.dpp_residual(dyn, base, t, K), 0.0, 1e-12))
                witness_cost = tree.cost(dyn, vt.upper_path, t, vt.upper_schedule)
                reports.append(CheckReport.equality("value_witness_cost", tag, witness_cost, vt.upper_value,
                                                    1e-10 * (1.0 + abs(vt.upper_value))))
            tail = rng.uniform(-1.0, 1.0, dyn.n) * dyn.c_star
            other = tree.value(dyn, extend(base, t, tail), t, K, witnesses=False)
            gap = max(abs(other.upper_value - vt.upper_value), abs(other.lower_value - vt.lower_value))
            reports.append(CheckReport.inequality("value_nonanticipative", tag, gap, 0.0, 1e-12))
            if _trivial(dyn):
                reports.append(CheckReport.equality("value_frozen_sigma", tag, vt.upper_value,
                                                    dyn.sigma(freeze(base, t)), 1e-12))
            trees[f"{t!r}"] = vt.to_dict(dyn)
            trace.extend([j, t] + row[:4] for row in vt.csv_rows())
        return TrialResult(reports, trace, {"base": base.digest[:12], "trees": trees})
    return run


def _lipschitz(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        phi = CandidateFunctional.value_tree(dyn, cfg.decision_k)
        paths = raw_paths(cfg, dyn, rng)[:LIPSCHITZ_PATHS]
        times = node_times(cfg)[:-1]
        pairs = [(t, x, y) for t in times for a, x in enumerate(paths) for y in paths[a + 1:]]
        report = lipschitz_L_check(phi, cfg.alpha, pairs)
        return TrialResult([report], [], {"lambda": report.extra["lambda"], "pairs": len(pairs),
                                          "evaluations": phi.evaluations})
    return run


def _minimax(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        phi = CandidateFunctional.value_tree(dyn, cfg.decision_k)
        base = raw_paths(cfg, dyn, rng)[0]
        t = node_times(cfg)[-2]
        s = rng.uniform(-1.0, 1.0, dyn.n)
        tag = {"base": base.digest[:12], "t": t, "s": s.tolist()}
        reports: list[CheckReport] = []
        residuals: dict[str, float] = {}
        for sign in ("plus", "minus"):
            w = tree.minimax_witness(phi, t, base, s, sign, dyn)
            residuals[sign] = w.residual
            reports.append(CheckReport.info(f"minimax_{sign}_residual", tag, w.residual,
                                            note="greedy search: residual <= 0 certifies the property"))
            ok, worst = ystar_check(w.path, t, dyn.c_star)
            reports.append(CheckReport.inequality("minimax_witness_ystar", {**tag, "sign": sign}, worst, 0.0,
                                                  1e-12 * max(1.0, dyn.c_star)))
        # (−φ, −s, H'(t,x,s') = −H(t,x,−s')) under "minus" mirrors (φ, s, H) under "plus"
        flipped = tree.minimax_witness(lambda tau, y: -phi(tau, y), t, base, -s, "minus", dyn,
                                       lambda tau, y, sv: -hamiltonian(dyn, tau, y, -sv).value)
        reports.append(CheckReport.equality("minimax_sign_flip", tag, flipped.residual, residuals["plus"],
                                            1e-12))
        return TrialResult(reports, [], {"residuals": residuals, "evaluations": phi.evaluations})
    return run


def trials(cfg: ScenarioConfig) -> list[Trial]:
    out = [Trial(f"tree_{j}", _tree_checks(cfg, j)) for j in range(min(TREE_PATHS, cfg.library.paths))]
    out.append(Trial("lipschitz", _lipschitz(cfg)))
    out.append(Trial("minimax", _minimax(cfg)))
    return out
