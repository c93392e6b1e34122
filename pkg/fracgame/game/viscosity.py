# fracgame/game/viscosity.py
"""Viscosity checks for candidate functionals and the doubling diagnostic.

All maximizations here run over finite path libraries: a reported maximizer is
the best point of the library, not of [0, T] × X_k, so the doubling bounds are
necessary-condition checks on the library only.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from fracgame.calculus.fraccalc import product_weights, singular_integral
from fracgame.calculus.paths import SampledPath, freeze
from fracgame.calculus.testfunc import (
    NuParams, PathFunctional, TestFunctional, c3, frozen_difference, mu_gradient, nu_excess,
)
from fracgame.core.errors import AlignmentError, ConfigError, DomainError
from fracgame.core.reports import GRADE_ASSERT, CheckReport
from fracgame.game.dynamics import GameDynamics, hamiltonian
from fracgame.game import tree

_LOG = logging.getLogger("fracgame.viscosity")

HJ_RTOL = 1e-2
LIPSCHITZ_CAP = 1e6
KAPPA_TOL = 1e-12

LIBRARY_NOTE = ("maximizer is taken over a finite path library; bounds are "
                "necessary-condition checks on that library only")


# ── candidate functionals ───────────────────────────────────────────────────
@dataclass(eq=False)
class CandidateFunctional:
    """Non-anticipative φ(t, x): always evaluated on freeze(x, t)."""
    name: str
    source: str                      # "value_tree" | "closed_form"
    evaluate: PathFunctional = field(repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __call__(self, t: float, x: SampledPath) -> float:
        frozen = freeze(x, t)
        key = (float(x.grid.nodes[x.grid.index_of(t)]), frozen.digest)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        val = float(self.evaluate(key[0], frozen))
        with self._lock:
            self._cache[key] = val
        return val

    @property
    def evaluations(self) -> int:
        return len(self._cache)

    @classmethod
    def closed_form(cls, name: str, fn: PathFunctional) -> "CandidateFunctional":
        return cls(name, "closed_form", fn)

    @classmethod
    def frozen_sigma(cls, dyn: GameDynamics) -> "CandidateFunctional":
        """σ(a(·|t,x)): the value when f and χ vanish."""
        return cls("frozen_sigma", "closed_form", lambda t, x: dyn.sigma(x))

    @classmethod
    def value_tree(cls, dyn: GameDynamics, K: int, mode: str = "upper", *,
                   budget: int = tree.TREE_BUDGET) -> "CandidateFunctional":
        """Tree value with decision spacing T/K: ceil(K·R/N) decisions over the R remaining cells."""
        def _value(t: float, x: SampledPath) -> float:
            i = x.grid.index_of(t)
            R = x.grid.N - i
            k = min(R, math.ceil(K * R / x.grid.N))
            return tree.value(dyn, x, t, k, mode, budget=budget, witnesses=False).value
        return cls(f"value_{mode}_K{K}", "value_tree", _value)

    def scaled(self, factor: float = 1.0, shift: float = 0.0, name: str | None = None) -> "CandidateFunctional":
        label = name or f"{self.name}*{factor!r}+{shift!r}"
        return CandidateFunctional(label, self.source, lambda t, x: factor * self(t, x) + shift)


def boundary_residual(phi: PathFunctional, sigma: Callable[[SampledPath], float],
                      paths: Sequence[SampledPath]) -> float:
    if not paths:
        return 0.0
    return max(abs(float(phi(p.T, p)) - float(sigma(p))) for p in paths)


# ── V+ / V- ─────────────────────────────────────────────────────────────────
def _viscosity_check(sign: str, phi: PathFunctional, psi: TestFunctional, dyn: GameDynamics,
                     points: Sequence[tuple[float, SampledPath]], grade: str) -> CheckReport:
    if not points:
        raise DomainError("viscosity check: empty sample set")
    diffs = np.array([float(phi(t, x)) - float(psi(t, x)) for t, x in points])
    idx = int(np.argmin(diffs)) if sign == "plus" else int(np.argmax(diffs))
    t, x = points[idx]
    check = "viscosity_vplus" if sign == "plus" else "viscosity_vminus"
    inputs = {"t": float(t), "x": x.digest[:12], "anchor_t": psi.anchor_t,
              "anchor": psi.anchor.digest[:12], "weight": psi.weight,
              "time_part": [float(c) for c in psi.time_part.coef], "samples": len(points)}
    if x.grid.index_of(t) == x.grid.N:
        return CheckReport.info(check, inputs, float(diffs[idx]),
                                note="inconclusive: extremum attained at t = T")
    ders = psi.derivatives(t, x)
    xt = x.node_values[x.grid.index_of(t)]
    H = hamiltonian(dyn, t, xt, ders.grad_alpha).value
    expr = ders.dt_alpha + H
    tol = HJ_RTOL * (1.0 + abs(H))
    extra = {"dt_alpha": ders.dt_alpha, "grad_alpha": ders.grad_alpha, "hamiltonian": H,
             "extremum": float(diffs[idx])}
    if sign == "plus":
        return CheckReport.inequality(check, inputs, expr, 0.0, tol, grade=grade, extra=extra)
    return CheckReport.inequality(check, inputs, 0.0, expr, tol, grade=grade, extra=extra)


def vplus_check(phi: PathFunctional, psi: TestFunctional, dyn: GameDynamics,
                points: Sequence[tuple[float, SampledPath]], *,
                grade: str = GRADE_ASSERT) -> CheckReport:
    """At the minimum of φ − ψ over the samples: ∂ψ + H(t, x(t), ∇ψ) <= 0."""
    return _viscosity_check("plus", phi, psi, dyn, points, grade)


def vminus_check(phi: PathFunctional, psi: TestFunctional, dyn: GameDynamics,
                 points: Sequence[tuple[float, SampledPath]], *,
                 grade: str = GRADE_ASSERT) -> CheckReport:
    """At the maximum of φ − ψ over the samples: ∂ψ + H(t, x(t), ∇ψ) >= 0."""
    return _viscosity_check("minus", phi, psi, dyn, points, grade)


# ── condition (L) ───────────────────────────────────────────────────────────
def lipschitz_L_check(phi: PathFunctional, alpha: float,
                      pairs: Sequence[tuple[float, SampledPath, SampledPath]], *,
                      bound: float | None = None, tol: float = 1e-12) -> CheckReport:
    """Least Λ with |φ(t,x) − φ(t,y)| <= Λ(‖Δa(T)‖ + ∫‖Δa‖(T−ξ)^{α−1}dξ) over the pairs."""
    lam, worst = 0.0, None
    for k, (t, x, y) in enumerate(pairs):
        grid, diff = frozen_difference(t, x, t, y)
        norms = np.linalg.norm(diff, axis=1)
        rhs = norms[-1] + float(singular_integral(norms, grid, 1.0 - alpha))
        lhs = abs(float(phi(t, x)) - float(phi(t, y)))
        if rhs > 0.0:
            ratio = lhs / rhs
        else:
            ratio = 0.0 if lhs <= tol else math.inf
        if ratio > lam:
            lam, worst = ratio, k
    cap = LIPSCHITZ_CAP if bound is None else float(bound)
    inputs = {"alpha": float(alpha), "pairs": len(pairs), "bound": bound}
    return CheckReport.inequality("lipschitz_L", inputs, lam, cap, tol,
                                  extra={"lambda": lam, "worst_pair": worst})


# ── doubling of variables ───────────────────────────────────────────────────
@dataclass
class DoublingRecord:
    eps: float
    t: float
    x_index: int
    tau: float
    y_index: int
    phi_max: float
    nu: float
    gap_lhs: float
    gap_rhs: float
    K2: float
    K3: float
    nu_bound_lhs: float
    nu_bound_rhs: float
    hj_x: float | None = None
    hj_y: float | None = None
    ham_diff: float | None = None
    grad_norm: float | None = None
    grad_bound: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class DoublingReport:
    status: str                      # "ok" | "no_contradiction_hypothesis"
    kappa: float
    zeta: float
    T: float
    alpha: float
    beta: float
    library: list[str]
    times: list[float]
    K1: float = 0.0
    B0: float = 0.0
    theta: float | None = None
    records: list[DoublingRecord] = field(default_factory=list)
    trace: list[list[Any]] = field(default_factory=list, repr=False)
    note: str = LIBRARY_NOTE

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "note": self.note,
            "kappa": self.kappa,
            "zeta": self.zeta,
            "T": self.T,
            "alpha": self.alpha,
            "beta": self.beta,
            "K1": self.K1,
            "B0": self.B0,
            "theta": self.theta,
            "library": list(self.library),
            "times": list(self.times),
            "records": [r.to_dict() for r in self.records],
        }

    def checks(self) -> list[CheckReport]:
        base = {"kappa": self.kappa, "library": len(self.library), "times": len(self.times)}
        if self.status != "ok":
            return [CheckReport.inequality("doubling_kappa", base, self.kappa, 0.0, KAPPA_TOL,
                                           note="no contradiction hypothesis")]
        out: list[CheckReport] = []
        for r in self.records:
            inputs = dict(base, eps=r.eps, t=r.t, tau=r.tau, x=r.x_index, y=r.y_index)
            out.append(CheckReport.inequality("doubling_gap_bound", inputs, r.gap_lhs, r.gap_rhs,
                                              1e-12 + 1e-9 * abs(r.gap_rhs)))
            out.append(CheckReport.inequality("doubling_nu_bound", inputs, r.nu_bound_lhs, r.nu_bound_rhs,
                                              1e-12 + 1e-9 * abs(r.nu_bound_rhs)))
            if r.grad_bound is not None:
                out.append(CheckReport.inequality("doubling_gradient_bound", inputs, r.grad_norm,
                                                  r.grad_bound, 1e-8 * (1.0 + r.grad_bound)))
            if r.ham_diff is not None:
                out.append(CheckReport.info("doubling_hamiltonian_gap", inputs, r.ham_diff, 2.0 * self.zeta,
                                            extra={"hj_x": r.hj_x, "hj_y": r.hj_y}))
        return out


def _choose_theta(v1: np.ndarray, v2: np.ndarray, times: np.ndarray, T: float, kappa: float) -> float | None:
    """Largest θ = T − t (t a library time, t > 0) with oscillation of φ₁, φ₂ over [T−θ, T] below κ/8."""
    osc = np.abs(v1 - v1[-1][None, :]) + np.abs(v2 - v2[-1][None, :])      # (times, paths)
    best = None
    for k in range(len(times) - 2, -1, -1):
        if times[k] <= 0.0:
            break
        if np.max(osc[k:]) > kappa / 8.0:
            break
        best = T - float(times[k])
    return best


def doubling_diagnostic(phi1: PathFunctional, phi2: PathFunctional, dyn: GameDynamics, params: NuParams,
                        eps_list: Sequence[float], library: Sequence[SampledPath],
                        times: Sequence[float] | None = None) -> DoublingReport:
    """Maximize Φ_ε over library × times for every ε and check the proof's bounds at the maximizer.

    Φ_ε = φ₁(t,x) − φ₂(τ,y) − (2T−t−τ)ζ − (t−τ)²ε^{−3/α} − ν_ε(t,x,τ,y)/ε.
    The library should be closed under freeze at `times` (see path_library).
    """
    if not library:
        raise ConfigError("doubling: empty path library")
    grid = library[0].grid
    if not all(p.grid.same_as(grid) for p in library):
        raise AlignmentError("doubling: library paths must share one grid")
    T, alpha = params.T, params.alpha
    ts = np.asarray(grid.nodes if times is None else sorted(set(float(t) for t in times)), dtype=float)
    if abs(ts[-1] - T) > 1e-12:
        ts = np.append(ts, T)
    idx = [grid.index_of(t) for t in ts]
    L = len(library)
    digests = [p.digest[:12] for p in library]

    # points (t_k, x_j) flattened as k * L + j
    v1 = np.array([[float(phi1(t, x)) for x in library] for t in ts])
    v2 = np.array([[float(phi2(t, x)) for x in library] for t in ts])
    kappa = float(np.max(v1 - v2))
    report = DoublingReport("ok", kappa, kappa / (4.0 * T), T, alpha, params.beta, digests,
                            [float(t) for t in ts])
    if kappa <= KAPPA_TOL:
        report.status = "no_contradiction_hypothesis"
        _LOG.info("[doubling] kappa=%.3e: no contradiction hypothesis", kappa)
        return report
    zeta = report.zeta
    report.K1 = float(v1.max() - v2.min())
    report.B0 = float(np.max(v1[-1] - v2[-1]))
    report.theta = _choose_theta(v1, v2, ts, T, kappa)

    frozen = np.array([[freeze(x, t).node_values for x in library] for t in ts])   # (nt, L, N+1, n)
    P = len(ts) * L
    F = frozen.reshape(P, grid.N + 1, -1)
    tp = np.repeat(ts, L)
    f1 = v1.reshape(P)
    f2 = v2.reshape(P)
    w = product_weights(grid.nodes, params.p, T, "right")
    eps_arr = [float(e) for e in eps_list]
    sets = [params.at_eps(e) for e in eps_arr]

    best = [(-math.inf, 0, 0, 0.0)] * len(sets)       # (Φ, a, b, ν)
    K2 = [0.0] * len(sets)
    row_best = np.full((len(sets), P), -math.inf)
    for a in range(P):
        d = F[a][None, :, :] - F
        sq = np.einsum("bij,bij->bi", d, d)
        same = tp == tp[a]
        dphi = np.abs(f1[a] - f1) + np.abs(f2[a] - f2)
        for m, pe in enumerate(sets):
            g = nu_excess(pe, sq)
            nu_row = g[:, -1] + g @ w
            phi = (f1[a] - f2 - (2.0 * T - tp[a] - tp) * zeta
                   - (tp[a] - tp) ** 2 / pe.eps ** (3.0 / alpha) - nu_row / pe.eps)
            b = int(np.argmax(phi))
            row_best[m, a] = phi[b]
            if phi[b] > best[m][0]:
                best[m] = (float(phi[b]), a, b, float(nu_row[b]))
            ratio = dphi[same] / (nu_row[same] + pe.offset) ** (1.0 / pe.q)
            K2[m] = max(K2[m], float(ratio.max()))

    for m, pe in enumerate(sets):
        val, a, b, nu_ab = best[m]
        ta, tb = float(tp[a]), float(tp[b])
        K3 = K2[m] + pe.C1 ** ((pe.q - 1.0) / pe.q)
        rec = DoublingRecord(
            eps=pe.eps, t=ta, x_index=a % L, tau=tb, y_index=b % L, phi_max=val, nu=nu_ab,
            gap_lhs=(ta - tb) ** 2,
            gap_rhs=(report.K1 - min(0.0, report.B0)) * pe.eps ** (3.0 / alpha),
            K2=K2[m], K3=K3,
            nu_bound_lhs=(nu_ab + pe.offset) ** ((pe.q - 1.0) / pe.q),
            nu_bound_rhs=K3 * pe.eps,
        )
        if ta < T and tb < T:
            x, y = library[a % L], library[b % L]
            gx = mu_gradient(pe, tb, y, ta, x).grad_alpha / pe.eps
            gy = -mu_gradient(pe, ta, x, tb, y).grad_alpha / pe.eps
            lag = 2.0 * (ta - tb) / pe.eps ** (3.0 / alpha)
            hx = hamiltonian(dyn, ta, x.node_values[grid.index_of(ta)], gx).value
            hy = hamiltonian(dyn, tb, y.node_values[grid.index_of(tb)], gy).value
            rec.hj_x = -zeta + lag + hx
            rec.hj_y = zeta + lag + hy
            rec.ham_diff = hx - hy
            theta = report.theta
            if theta is not None and ta <= T - theta + 1e-12 and tb <= T - theta + 1e-12:
                rec.grad_norm = float(np.linalg.norm(gx))
                rec.grad_bound = c3(pe, theta) * K3
        report.records.append(rec)
        report.trace.extend([pe.eps, float(tp[k]), k % L, float(row_best[m, k])] for k in range(P))
        _LOG.debug("[doubling] eps=%s max=%.6g at t=%s tau=%s", pe.eps, val, ta, tb)
    _LOG.info("[doubling] kappa=%.4g zeta=%.4g theta=%s points=%d", kappa, zeta, report.theta, P)
    return report
