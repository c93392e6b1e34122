# fracgame/suites/lemmas.py
"""ν_ε / μ_ε lemma harness, constants and finite-difference ci-derivative checks."""
from __future__ import annotations

import logging

import numpy as np

from fracgame.calculus.fraccalc import gamma_fn
from fracgame.calculus.paths import freeze
from fracgame.calculus.testfunc import a1, c2, c3, c4, ci_derivative_fd, lemma_harness, mu, mu_gradient
from fracgame.core.config import ScenarioConfig
from fracgame.core.reports import GRADE_ASSERT, GRADE_INFO, CheckReport
from fracgame.suites.common import (
    Trial, TrialResult, library, nu_params, raw_paths, scenario_dynamics, scenario_grid,
)

_LOG = logging.getLogger("fracgame.suites.lemmas")

TRACE_HEADER = ["series", "eps", "delta", "error", "residual_ratio"]

CHUNK = 25
TERMINAL_RTOL = 1e-3
FINE_STEP = 1.0 / 64     # fraction of T below which the μ_ε finite differences are asserted
MU_RTOL_FACTOR = 2.0


def _harness(cfg: ScenarioConfig, eps: float, trials: int):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        paths = library(cfg, dyn, rng)
        reports = lemma_harness(nu_params(cfg, eps), paths, cfg.theta, trials, rng, eps_seq=cfg.harness.eps)
        return TrialResult(reports)
    return run


def _constants(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        reports: list[CheckReport] = []
        details: dict[str, dict] = {}
        for eps in cfg.harness.eps:
            pe = nu_params(cfg, eps)
            row = {**pe.describe(), "C1": pe.C1, "C2": c2(pe), "C3": c3(pe, cfg.theta), "C4": c4(pe, cfg.theta),
                   "A1": a1(pe, cfg.theta), "theta": cfg.theta}
            details[f"{eps!r}"] = row
            for name in ("C1", "C2", "C3", "C4", "A1"):
                reports.append(CheckReport.info(f"constant_{name}", {"eps": eps, "theta": cfg.theta}, row[name]))
        return TrialResult(reports, [], details)
    return run


def _terminal_value(s: np.ndarray):
    """φ(t, x) = ⟨s, a_x(T)⟩."""
    return lambda t, x: float(s @ freeze(x, t).node_values[-1])


def _fd(cfg: ScenarioConfig):
    def run(rng: np.random.Generator) -> TrialResult:
        dyn = scenario_dynamics(cfg)
        grid = scenario_grid(cfg, cfg.fd_n)
        paths = raw_paths(cfg, dyn, rng, grid)
        x, y = paths[0], paths[-1]
        t = float(grid.nodes[grid.N // 4])
        deltas = [cfg.T / d for d in sorted(cfg.harness.fd_deltas)]
        reports: list[CheckReport] = []
        trace: list[list] = []

        # ⟨s, a_x(T)⟩ has ∇ = s / (Γ(α)(T − t)^{1−α}) and no time derivative
        s = rng.uniform(-1.0, 1.0, x.n)
        expected = s / (gamma_fn(cfg.alpha) * (cfg.T - t) ** (1.0 - cfg.alpha))
        phi = _terminal_value(s)
        for delta in deltas:
            est = ci_derivative_fd(phi, t, x, delta)
            err = float(np.linalg.norm(est.pair.grad_alpha - expected) / np.linalg.norm(expected))
            trace.append(["terminal", 0.0, est.delta, err, est.residual_ratio])
            # first-order truncation of the kernel over one step
            tol = max(TERMINAL_RTOL, (1.0 - cfg.alpha) * est.delta / (cfg.T - t))
            inputs = {"t": t, "delta": est.delta, "x": x.digest[:12], "s": s.tolist()}
            reports.append(CheckReport.inequality("fd_terminal_gradient", inputs, err, tol,
                                                  extra={"dt_alpha": est.pair.dt_alpha}))
            reports.append(CheckReport.inequality("fd_terminal_time_derivative", inputs,
                                                  abs(est.pair.dt_alpha), 0.0, 1e-8 * (1.0 + np.linalg.norm(expected))))

        # μ_ε against the closed-form ci-gradient; asserted once δ <= T/64
        for eps in cfg.harness.eps[:1]:
            pe = nu_params(cfg, eps)
            anchor_t = float(grid.nodes[grid.N // 2])
            exact = mu_gradient(pe, anchor_t, y, t, x).grad_alpha
            scale = max(float(np.linalg.norm(exact)), 1e-12)
            errs, ratios = [], []
            for delta in deltas:
                est = ci_derivative_fd(mu(pe, anchor_t, y), t, x, delta)
                err = float(np.linalg.norm(est.pair.grad_alpha - exact)) / scale
                errs.append(err)
                fine = est.delta <= cfg.T * FINE_STEP * (1.0 + 1e-12)
                if fine:
                    ratios.append(est.residual_ratio)
                trace.append(["mu", eps, est.delta, err, est.residual_ratio])
                tol = MU_RTOL_FACTOR * (est.delta / (cfg.T - t)) ** cfg.alpha
                reports.append(CheckReport.inequality("fd_mu_gradient", {"eps": eps, "t": t, "delta": est.delta},
                                                      err, tol, grade=GRADE_ASSERT if fine else GRADE_INFO,
                                                      note="constant-tail remainder is O(delta^alpha)",
                                                      extra={"dt_alpha": est.pair.dt_alpha,
                                                             "residual_ratio": est.residual_ratio}))
            inputs = {"eps": eps, "t": t, "deltas": [d for d in deltas if d <= cfg.T * FINE_STEP * (1.0 + 1e-12)]}
            if len(ratios) > 1:
                worst = max(b / max(a, 1e-300) for a, b in zip(ratios, ratios[1:]))
                reports.append(CheckReport.inequality("fd_mu_residual_monotone", inputs, worst, 1.0,
                                                      note="misfit/delta falls as delta halves",
                                                      extra={"residual_ratio": ratios, "errors": errs}))
            else:
                reports.append(CheckReport.info("fd_mu_residual_monotone", inputs, float("nan"),
                                                note=f"needs two steps at or below T/{round(1 / FINE_STEP)}",
                                                extra={"errors": errs}))
            _LOG.debug("[lemmas] fd mu errors eps=%s: %s", eps, errs)
        return TrialResult(reports, trace)
    return run


def trials(cfg: ScenarioConfig) -> list[Trial]:
    out: list[Trial] = []
    for m, eps in enumerate(cfg.harness.eps):
        left = cfg.harness.trials
        c = 0
        while left > 0:
            n = min(CHUNK, left)
            out.append(Trial(f"harness_{m}_{c}", _harness(cfg, eps, n)))
            left -= n
            c += 1
    out.append(Trial("constants", _constants(cfg)))
    out.append(Trial("fd", _fd(cfg)))
    return out
