# fracgame/calculus/testfunc.py
"""The doubling functional ν_ε, its one-sided form μ_ε and their constants.

ν_ε(t,x,τ,y) measures the distance between the frozen extensions a(·|t,x) and
a(·|τ,y) with a weight that is singular at T; μ_ε^{(τ*,y*)} = ν_ε(·,·,τ*,y*) is
ci-smooth with a closed-form gradient. Finite-difference probes along path
extensions give an independent estimate of that gradient.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from fracgame.calculus.fraccalc import Grid, beta_fn, double_singular_integral, gamma_fn, singular_integral
from fracgame.calculus.paths import SampledPath, eval_many, extend, freeze
from fracgame.core.errors import AccuracyError, AlignmentError, ConditioningError, DomainError
from fracgame.core.reports import CheckReport

_LOG = logging.getLogger("fracgame.testfunc")

PathFunctional = Callable[[float, SampledPath], float]

FREEZE_TOL = 1e-10
COND_LIMIT = 1e12


def default_beta(alpha: float) -> float:
    return min(1.0 - alpha, alpha / 2.0) / 2.0


@dataclass(frozen=True)
class NuParams:
    eps: float
    alpha: float
    beta: float
    T: float = 1.0

    def __post_init__(self):
        eps, alpha, beta, T = float(self.eps), float(self.alpha), float(self.beta), float(self.T)
        if not eps > 0.0:
            raise DomainError(f"nu params: eps must be positive, got {eps!r}")
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"nu params: alpha must lie in (0, 1), got {alpha!r}")
        if not 0.0 < beta < min(1.0 - alpha, alpha / 2.0):
            raise DomainError(
                f"nu params: beta must lie in (0, {min(1.0 - alpha, alpha / 2.0)!r}), got {beta!r}"
            )
        if not T > 0.0:
            raise DomainError(f"nu params: T must be positive, got {T!r}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "T", T)

    @classmethod
    def with_default_beta(cls, eps: float, alpha: float, T: float = 1.0) -> "NuParams":
        return cls(eps, alpha, default_beta(alpha), T)

    def at_eps(self, eps: float) -> "NuParams":
        return NuParams(eps, self.alpha, self.beta, self.T)

    @property
    def q(self) -> float:
        return 2.0 / (2.0 - self.alpha)

    @property
    def p(self) -> float:
        """Exponent of the (T − ξ) weight: (1 − α − β)q."""
        return (1.0 - self.alpha - self.beta) * self.q

    @property
    def E(self) -> float:
        """ε^{2/(q−1)}."""
        return self.eps ** (2.0 / (self.q - 1.0))

    @property
    def C1(self) -> float:
        return 1.0 + self.T ** (1.0 - self.p) / (1.0 - self.p)

    @property
    def offset(self) -> float:
        """C₁ε^{q/(q−1)}, the constant subtracted in ν_ε."""
        return self.C1 * self.E ** (self.q / 2.0)

    def describe(self) -> dict:
        return {"eps": self.eps, "alpha": self.alpha, "beta": self.beta, "T": self.T,
                "q": self.q, "p": self.p, "C1": self.C1}


@dataclass(frozen=True)
class CiDerivativePair:
    dt_alpha: float
    grad_alpha: np.ndarray

    def __post_init__(self):
        g = np.array(self.grad_alpha, dtype=float).reshape(-1)
        g.setflags(write=False)
        object.__setattr__(self, "dt_alpha", float(self.dt_alpha))
        object.__setattr__(self, "grad_alpha", g)


# ── ν_ε ─────────────────────────────────────────────────────────────────────
def _check_horizon(params: NuParams, *paths: SampledPath) -> None:
    for path in paths:
        if abs(path.T - params.T) > 1e-12 * max(1.0, params.T):
            raise AlignmentError(f"nu: path horizon {path.T!r} differs from T={params.T!r}")


def frozen_difference(t: float, x: SampledPath, tau: float, y: SampledPath) -> tuple[Grid, np.ndarray]:
    """a(·|t,x) − a(·|τ,y) at the nodes of the (merged) grid."""
    ax, ay = freeze(x, t), freeze(y, tau)
    if x.grid.same_as(y.grid):
        return x.grid, ax.node_values - ay.node_values
    grid = x.grid.merged(y.grid)
    return grid, eval_many(ax, grid.nodes) - eval_many(ay, grid.nodes)


def nu_excess(params: NuParams, sq: np.ndarray) -> np.ndarray:
    """(E + D)^{q/2} − E^{q/2}, written to vanish exactly at D = 0."""
    E = params.E
    return E ** (params.q / 2.0) * np.expm1(0.5 * params.q * np.log1p(sq / E))


@dataclass(frozen=True)
class NuParts:
    terminal: float      # (E + ‖Δa(T)‖²)^{q/2} − E^{q/2}
    integral: float      # weighted integral of the same excess

    @property
    def value(self) -> float:
        return self.terminal + self.integral


def nu_parts(params: NuParams, t: float, x: SampledPath, tau: float, y: SampledPath) -> NuParts:
    _check_horizon(params, x, y)
    grid, diff = frozen_difference(t, x, tau, y)
    g = nu_excess(params, np.einsum("ij,ij->i", diff, diff))
    parts = NuParts(float(g[-1]), float(singular_integral(g, grid, params.p)))
    if not math.isfinite(parts.value):
        raise AccuracyError(f"nu: quadrature produced {parts.value!r} (eps={params.eps})")
    return parts


def nu(params: NuParams, t: float, x: SampledPath, tau: float, y: SampledPath) -> float:
    return nu_parts(params, t, x, tau, y).value


def mu(params: NuParams, tau_star: float, y_star: SampledPath) -> PathFunctional:
    """μ_ε^{(τ*,y*)}(t, x) = ν_ε(t, x, τ*, y*)."""
    def _mu(t: float, x: SampledPath) -> float:
        return nu(params, t, x, tau_star, y_star)
    return _mu


def freeze_invariance_check(params: NuParams, t: float, x: SampledPath, tau: float, y: SampledPath,
                            t2: float, tau2: float) -> CheckReport:
    if t2 < t or tau2 < tau:
        raise DomainError(f"freeze_invariance_check: need t'={t2!r} >= t={t!r} and tau'={tau2!r} >= tau={tau!r}")
    base = nu(params, t, x, tau, y)
    moved = nu(params, t2, freeze(x, t), tau2, freeze(y, tau))
    inputs = {"eps": params.eps, "alpha": params.alpha, "t": t, "tau": tau, "t2": t2, "tau2": tau2,
              "x": x.digest[:12], "y": y.digest[:12]}
    return CheckReport.inequality("nu_freeze_invariance", inputs, abs(moved - base), 0.0, FREEZE_TOL)


# ── constants ───────────────────────────────────────────────────────────────
def _check_theta(params: NuParams, theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < params.T:
        raise DomainError(f"theta must lie in (0, T={params.T!r}), got {theta!r}")
    return theta


def c2(params: NuParams) -> float:
    b, q, T = params.beta, params.q, params.T
    r = (q - 1.0) / q
    return 1.0 + T ** (r - b) / (1.0 - b * q / (q - 1.0)) ** r


def c3(params: NuParams, theta: float) -> float:
    theta = _check_theta(params, theta)
    a, b, q, T = params.alpha, params.beta, params.q, params.T
    B = beta_fn(1.0 - (1.0 - a) * q, 1.0 - params.p)
    return q / (gamma_fn(a) * theta ** (1.0 - a)) * (1.0 + T ** (1.0 / q - 1.0 + a + b) * B ** (1.0 / q))


def a1(params: NuParams, theta: float) -> float:
    """Lipschitz constant of t ↦ B(α, 1−p)(T−t)^{α−p} on [0, T−θ]."""
    theta = _check_theta(params, theta)
    e = params.alpha - params.p
    if e == 0.0:
        return 0.0
    worst = theta ** (e - 1.0) if e < 1.0 else params.T ** (e - 1.0)
    return abs(e) * beta_fn(params.alpha, 1.0 - params.p) * worst


def c4(params: NuParams, theta: float) -> float:
    theta = _check_theta(params, theta)
    a, T = params.alpha, params.T
    return params.q / gamma_fn(a) * (
        (1.0 - a) * T ** (1.0 - a) / theta ** (2.0 - a)
        + a1(params, theta) * T ** (1.0 - a)
        + 2.0 / (a * theta ** params.p)
    )


# ── ci-gradient of μ_ε ──────────────────────────────────────────────────────
def mu_gradient(params: NuParams, tau_star: float, y_star: SampledPath, t: float,
                x: SampledPath) -> CiDerivativePair:
    _check_horizon(params, x, y_star)
    if x.grid.index_of(t) == x.grid.N:
        raise DomainError("mu_gradient: t must be < T")
    grid, diff = frozen_difference(t, x, tau_star, y_star)
    i = grid.index_of(t)
    nodes = grid.nodes[i:]
    d = diff[i:]
    sq = np.einsum("ij,ij->i", d, d)
    w = d / ((params.E + sq) ** (1.0 - params.q / 2.0))[:, None]
    a = params.alpha
    T = params.T
    head = w[-1] * (T - nodes[0]) ** (a - 1.0)
    body = double_singular_integral(w, nodes, a, params.p)
    grad = params.q / gamma_fn(a) * (head + body)
    return CiDerivativePair(0.0, grad)


# ── finite-difference ci-derivative ─────────────────────────────────────────
@dataclass(frozen=True)
class CiEstimate:
    pair: CiDerivativePair
    residual: float      # max |least-squares misfit| over the probes
    delta: float
    probes: int

    @property
    def residual_ratio(self) -> float:
        return self.residual / self.delta


def probe_tails(n: int, scale: float = 1.0) -> list[np.ndarray]:
    """Zero tail plus ±scale along every axis."""
    tails = [np.zeros(n)]
    for i in range(n):
        e = np.zeros(n)
        e[i] = scale
        tails.extend([e, -e])
    return tails


def ci_derivative_fd(phi: PathFunctional, t: float, x: SampledPath, delta: float,
                     directions: Sequence | None = None, *, scale: float = 1.0) -> CiEstimate:
    """Least-squares (∂_t^α, ∇^α) from φ(t+δ, y) − φ(t, x) over probe extensions y.

    Each probe y = extend(x, t, tail) contributes the row (δ, ∫_t^{t+δ} ᶜD^α y).
    """
    grid = x.grid
    i = grid.index_of(t)
    j = grid.index_of(float(grid.nodes[i]) + float(delta))
    if j - i < 2:
        raise DomainError(f"ci_derivative_fd: delta={delta!r} must span at least 2 grid cells")
    tails = probe_tails(x.n, scale) if directions is None else list(directions)
    t0, t1 = float(grid.nodes[i]), float(grid.nodes[j])
    h = grid.steps[i:j]
    base = float(phi(t0, x))
    rows, rhs = [], []
    for tail in tails:
        y = extend(x, t0, tail)
        rows.append(np.concatenate([[t1 - t0], h @ y.caputo[i:j]]))
        rhs.append(float(phi(t1, y)) - base)
    A = np.asarray(rows)
    b = np.asarray(rhs)
    if A.shape[0] < A.shape[1] or np.linalg.cond(A) > COND_LIMIT:
        raise ConditioningError(
            f"ci_derivative_fd: probe design is singular ({A.shape[0]} probes, {A.shape[1]} unknowns)"
        )
    z, *_ = np.linalg.lstsq(A, b, rcond=None)
    misfit = float(np.max(np.abs(A @ z - b)))
    _LOG.debug("[fd] t=%s delta=%s misfit=%.3e", t0, t1 - t0, misfit)
    return CiEstimate(CiDerivativePair(z[0], z[1:]), misfit, t1 - t0, len(tails))


# ── ψ = g(t) + c·μ_ε ────────────────────────────────────────────────────────
@dataclass(frozen=True)
class TestFunctional:
    """ψ(t, x) = g(t) + weight·μ_ε^{(τ*,y*)}(t, x) with a polynomial g."""
    __test__ = False  # not a pytest class

    params: NuParams
    anchor_t: float
    anchor: SampledPath
    time_part: Polynomial = field(default_factory=lambda: Polynomial([0.0]))
    weight: float = 1.0

    def __call__(self, t: float, x: SampledPath) -> float:
        val = float(self.time_part(t))
        if self.weight != 0.0:
            val += self.weight * nu(self.params, t, x, self.anchor_t, self.anchor)
        return val

    def derivatives(self, t: float, x: SampledPath) -> CiDerivativePair:
        dt = float(self.time_part.deriv()(t))
        if self.weight == 0.0:
            return CiDerivativePair(dt, np.zeros(x.n))
        g = mu_gradient(self.params, self.anchor_t, self.anchor, t, x)
        return CiDerivativePair(dt, self.weight * g.grad_alpha)

    def negated(self) -> "TestFunctional":
        return TestFunctional(self.params, self.anchor_t, self.anchor, -self.time_part, -self.weight)


# ── lemma harness ───────────────────────────────────────────────────────────
def _inputs(params: NuParams, t: float, x: SampledPath, tau: float, y: SampledPath, **more) -> dict:
    out = {"eps": params.eps, "alpha": params.alpha, "beta": params.beta, "T": params.T,
           "t": float(t), "tau": float(tau), "x": x.digest[:12], "y": y.digest[:12]}
    out.update(more)
    return out


def _lipschitz_via_nu(params: NuParams, t, x, tau, y) -> CheckReport:
    grid, diff = frozen_difference(t, x, tau, y)
    norms = np.linalg.norm(diff, axis=1)
    lhs = norms[-1] + float(singular_integral(norms, grid, 1.0 - params.alpha))
    rhs = c2(params) * (nu(params, t, x, tau, y) + params.offset) ** (1.0 / params.q)
    return CheckReport.inequality("lemma_lipschitz_via_nu", _inputs(params, t, x, tau, y),
                                  lhs, rhs, 1e-9 * (1.0 + rhs))


def _integral_bound(params: NuParams, t, x, tau, y) -> CheckReport:
    grid, diff = frozen_difference(t, x, tau, y)
    pw = np.linalg.norm(diff, axis=1) ** params.q
    lhs = pw[-1] + float(singular_integral(pw, grid, params.p))
    rhs = nu(params, t, x, tau, y) + params.offset
    return CheckReport.inequality("lemma_integral_bound", _inputs(params, t, x, tau, y),
                                  lhs, rhs, 1e-12 * (1.0 + rhs))


def _nu_identities(params: NuParams, t, x, tau, y) -> list[CheckReport]:
    v = nu(params, t, x, tau, y)
    w = nu(params, tau, y, t, x)
    inputs = _inputs(params, t, x, tau, y)
    return [
        CheckReport.inequality("nu_nonnegative", inputs, -v, 0.0, 0.0),
        CheckReport.equality("nu_self_vanishing", _inputs(params, t, x, t, x), nu(params, t, x, t, x), 0.0, 1e-10),
        CheckReport.equality("nu_symmetry", inputs, v, w, 1e-12 * (1.0 + abs(v))),
    ]


def _nu_convergence(params: NuParams, eps_seq: Sequence[float], t, x, y) -> CheckReport:
    """Homotopy y_k → x with scale ε_k/ε_0: sup distance of freezes must fall with ν."""
    f0 = np.asarray(eps_seq, dtype=float)
    nus, sups = [], []
    for e in f0:
        lam = e / f0[0]
        yk = SampledPath(x.alpha, x.x0 + lam * (y.x0 - x.x0), x.grid,
                         x.caputo + lam * (y.caputo - x.caputo))
        nus.append(nu(params.at_eps(e), t, x, t, yk))
        _, diff = frozen_difference(t, x, t, yk)
        sups.append(float(np.max(np.linalg.norm(diff, axis=1))))
    worst = 0.0
    for k in range(1, len(nus)):
        if nus[k] < nus[k - 1]:
            worst = max(worst, sups[k] - sups[k - 1])
    inputs = _inputs(params, t, x, t, y, eps_seq=[float(e) for e in f0])
    return CheckReport.inequality("lemma_nu_convergence", inputs, worst, 0.0, 1e-12,
                                  extra={"nu": nus, "sup": sups})


def _gradient_bounds(params: NuParams, theta: float, t, x, tau, y) -> list[CheckReport]:
    gx = mu_gradient(params, tau, y, t, x).grad_alpha
    gy = mu_gradient(params, t, x, tau, y).grad_alpha
    inputs = _inputs(params, t, x, tau, y, theta=theta)
    base = nu(params, t, x, tau, y) + params.offset
    rhs3 = c3(params, theta) * base ** ((params.q - 1.0) / params.q)
    _, diff = frozen_difference(t, x, tau, y)
    sup2 = float(np.max(np.einsum("ij,ij->i", diff, diff)))
    rhs4 = c4(params, theta) * (params.E + sup2) ** ((params.q - 1.0) / 2.0) * abs(t - tau) ** params.alpha
    lhs4 = float(np.linalg.norm(gx + gy))
    return [
        CheckReport.inequality("lemma_gradient_bound", inputs, float(np.linalg.norm(gx)), rhs3,
                               1e-8 * (1.0 + rhs3)),
        CheckReport.inequality("lemma_gradient_symmetric", inputs, lhs4, rhs4, 1e-8 * (1.0 + rhs4)),
    ]


def lemma_harness(params: NuParams, paths: Sequence[SampledPath], theta: float, trials: int,
                  rng: np.random.Generator, *, eps_seq: Sequence[float] = (0.1, 0.01, 0.001)) -> list[CheckReport]:
    """Random-pair checks of the ν_ε identities and the Lipschitz, integral and gradient bounds."""
    if len(paths) < 1:
        raise DomainError("lemma_harness: needs at least one path")
    theta = _check_theta(params, theta)
    grid = paths[0].grid
    if not all(p.grid.same_as(grid) for p in paths):
        raise AlignmentError("lemma_harness: paths must share one grid")
    _check_horizon(params, *paths)
    nodes = grid.nodes
    inner = nodes[nodes <= params.T - theta + 1e-12]
    reports: list[CheckReport] = []
    for _ in range(int(trials)):
        x = paths[int(rng.integers(len(paths)))]
        y = paths[int(rng.integers(len(paths)))]
        t, tau = (float(v) for v in rng.choice(nodes, 2))
        reports.extend(_nu_identities(params, t, x, tau, y))
        reports.append(freeze_invariance_check(params, t, x, tau, y,
                                               float(rng.choice(nodes[nodes >= t])),
                                               float(rng.choice(nodes[nodes >= tau]))))
        reports.append(_lipschitz_via_nu(params, t, x, tau, y))
        reports.append(_integral_bound(params, t, x, tau, y))
        tc, tauc = (float(v) for v in rng.choice(inner[inner < params.T], 2))
        reports.extend(_gradient_bounds(params, theta, tc, x, tauc, y))
        reports.append(_nu_convergence(params, eps_seq, tc, x, y))
    _LOG.info("[lemmas] alpha=%s eps=%s trials=%d reports=%d", params.alpha, params.eps, trials, len(reports))
    return reports
