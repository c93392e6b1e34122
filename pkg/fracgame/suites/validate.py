# fracgame/suites/validate.py
"""Assumption checks on the dynamics, Hamiltonian properties, path and quadrature identities."""
from __future__ import annotations

import numpy as np

from fracgame.calculus.fraccalc import beta_identity_check, convolution_weights, gamma_fn, mittag_leffler
from fracgame.calculus.paths import (
    SampledPath, eval_many, extend, freeze, freeze_bound_check, holder_check, l1_caputo, sup_distance, xk_check,
)
from fracgame.calculus.testfunc import default_beta
from fracgame.core.config import ScenarioConfig
from fracgame.core.reports import CheckReport
from fracgame.game.dynamics import SampleSpec, hamiltonian, hamiltonian_properties, validate_assumptions
from fracgame.suites.common import Trial, TrialResult, node_times, raw_paths, scenario_dynamics, scenario_grid

TRACE_HEADER = ["check", "index", "lhs", "rhs"]


def _spec(cfg: ScenarioConfig) -> SampleSpec:
    return SampleSpec(T=cfg.T, points=cfg.harness.samples, alpha=cfg.alpha,
                      path_cells=min(cfg.fine_n, 256), k=cfg.library.k)


def _assumptions(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        spec = _spec(cfg)
        reports = validate_assumptions(dyn, spec, rng) + hamiltonian_properties(dyn, spec, rng)
        # with χ ≡ 0 the Hamiltonian is positively homogeneous in s
        if not (np.any(dyn.d) or np.any(dyn.e_u) or np.any(dyn.e_v) or dyn.chi0):
            worst = 0.0
            for _ in range(spec.points):
                t = float(rng.uniform(0.0, cfg.T))
                x = rng.uniform(-1.0, 1.0, dyn.n) * spec.radius
                s = rng.uniform(-1.0, 1.0, dyn.n) * spec.s_radius
                c = float(rng.uniform(0.1, 10.0))
                h1 = hamiltonian(dyn, t, x, s).value
                h2 = hamiltonian(dyn, t, x, c * s).value
                worst = max(worst, abs(h2 - c * h1) / (1.0 + abs(c * h1)))
            reports.append(CheckReport.inequality("hamiltonian_homogeneity",
                                                  {"catalog": dyn.catalog_id, "points": spec.points},
                                                  worst, 0.0, 1e-12))
        return TrialResult(reports, [[r.check, k, r.lhs, r.rhs] for k, r in enumerate(reports)],
                           {"dynamics": dyn.describe(), "lambda_star": dyn.lambda_star,
                            "affine_payoff": dyn.affine_payoff})
    return run


def _quadrature(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        reports: list[CheckReport] = []
        beta = cfg.beta
        q = 2.0 / (2.0 - cfg.alpha)
        for _ in range(cfg.harness.samples):
            gam = float(rng.uniform(0.2, 1.0))
            t = float(rng.uniform(0.0, 0.9 * cfg.T))
            reports.append(beta_identity_check(gam, t, cfg.alpha, beta, q, cfg.T))
        grid = scenario_grid(cfg)
        w = convolution_weights(grid, cfg.alpha)
        exact = grid.nodes ** cfg.alpha / gamma_fn(cfg.alpha + 1.0)
        reports.append(CheckReport.inequality(
            "weights_row_sums", {"N": grid.N, "alpha": cfg.alpha},
            float(np.max(np.abs(w.row_sums() - exact))), 0.0, 1e-12 * (1.0 + float(exact[-1]))))
        # E_1(z) = e^z
        z = np.linspace(-2.0, 2.0, 9)
        err = max(abs(mittag_leffler(1.0, float(v)) - float(np.exp(v))) for v in z)
        reports.append(CheckReport.inequality("mittag_leffler_exp", {"points": len(z)}, err, 0.0, 1e-13))
        reports.append(CheckReport.info("default_beta", {"alpha": cfg.alpha}, beta, default_beta(cfg.alpha)))
        return TrialResult(reports, [[r.check, k, r.lhs, r.rhs] for k, r in enumerate(reports)])
    return run


def _path_checks(cfg: ScenarioConfig, path: SampledPath, rng: np.random.Generator,
                 c_star: float, times: list[float]) -> list[CheckReport]:
    grid = path.grid
    nodes = grid.nodes
    tag = {"path": path.digest[:12]}
    out: list[CheckReport] = []
    m = xk_check(path, cfg.library.k, c_star)
    out.append(CheckReport.inequality("path_xk_membership", {**tag, "k": m.k, "c_star": m.c_star},
                                      m.worst_margin, 0.0, 1e-12 * max(1.0, m.k * m.c_star)))

    i1, i2 = sorted(int(v) for v in rng.integers(0, grid.N + 1, 2))
    t1, t2 = float(nodes[i1]), float(nodes[i2])
    semi = sup_distance(freeze(freeze(path, t2), t1), freeze(path, t1))
    out.append(CheckReport.inequality("freeze_semigroup", {**tag, "t1": t1, "t2": t2}, semi, 0.0, 1e-14))

    # a(·|t,x) agrees with x on [0, t]
    head = np.max(np.abs(freeze(path, t2).node_values[: i2 + 1] - path.node_values[: i2 + 1]))
    out.append(CheckReport.inequality("freeze_prefix", {**tag, "t": t2}, float(head), 0.0, 1e-12))

    # over every library time: the bound by the history and dependence on [0, t] only
    for t in times:
        out.append(freeze_bound_check(path, t))
        i = grid.index_of(t)
        other = extend(path, t, rng.uniform(-1.0, 1.0, (grid.N - i, path.n)) * c_star)
        out.append(CheckReport.inequality("freeze_nonanticipative", {**tag, "t": t},
                                          sup_distance(freeze(other, t), freeze(path, t)), 0.0, 1e-14))

    tail = rng.uniform(-1.0, 1.0, (grid.N - i1, path.n))
    out.append(holder_check(path, t1, tail, t2))

    # extensions share the history up to t
    y = extend(path, t1, tail)
    hist = float(np.max(np.abs(y.node_values[: i1 + 1] - path.node_values[: i1 + 1])))
    out.append(CheckReport.inequality("extend_prefix", {**tag, "t": t1}, hist, 0.0, 1e-12))

    # L1 scheme against the stored samples
    l1 = l1_caputo(path)
    out.append(CheckReport.info("path_l1_caputo", tag, float(np.max(np.abs(l1 - path.caputo))),
                                note="L1 discretization error of the node values"))

    mid = 0.5 * (nodes[:-1] + nodes[1:])
    vals = eval_many(path, mid)
    out.append(CheckReport.info("path_eval_midpoints", tag, float(np.max(np.linalg.norm(vals, axis=1)))))

    back = SampledPath.from_json(path.to_json())
    out.append(CheckReport.equality("path_json_roundtrip", tag, sup_distance(back, path), 0.0, 0.0))
    return out


def _paths(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        reports: list[CheckReport] = []
        times = node_times(cfg)
        for path in raw_paths(cfg, dyn, rng):
            reports.extend(_path_checks(cfg, path, rng, dyn.c_star, times))
        return TrialResult(reports, [[r.check, k, r.lhs, r.rhs] for k, r in enumerate(reports)])
    return run


def trials(cfg: ScenarioConfig) -> list[Trial]:
    return [
        Trial("assumptions", _assumptions(cfg)),
        Trial("quadrature", _quadrature(cfg)),
        Trial("paths", _paths(cfg)),
    ]
