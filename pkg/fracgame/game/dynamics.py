# fracgame/game/dynamics.py
"""Game data (f, χ, σ, P, Q) from a built-in catalog, the Hamiltonian and
empirical checks of the standing assumptions.

Every catalog family is a componentwise-linear form

    f = f0 + a∘x + b∘u + c∘v,      χ = chi0 + ⟨d, x⟩ + ⟨e_u, u⟩ + ⟨e_v, v⟩,

so min/max over the finite control grids are exact and bit-reproducible.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from fracgame.calculus.paths import SampledPath, random_path
from fracgame.calculus.fraccalc import Grid, trapezoid
from fracgame.core.errors import DomainError
from fracgame.core.reports import CheckReport

_LOG = logging.getLogger("fracgame.dynamics")

SIGMA_MODES = ("terminal", "norm", "mean")


@dataclass(frozen=True)
class _Family:
    n: int
    defaults: Mapping[str, Any]
    fixed: Mapping[str, Any] = field(default_factory=dict)


# catalog id -> (state dimension, tunable params with defaults, fixed params)
CATALOG: dict[str, _Family] = {
    "linear_scalar": _Family(
        n=1,
        defaults={"a": 0.0, "b": 0.0, "c": 0.0, "d": 0.0, "e_u": 0.0, "e_v": 0.0,
                  "f0": 0.0, "chi0": 0.0, "sigma": "terminal"},
    ),
    "pursuit_1d": _Family(
        n=1,
        defaults={},
        fixed={"a": 0.0, "b": 1.0, "c": -1.0, "d": 0.0, "e_u": 0.0, "e_v": 0.0,
               "f0": 0.0, "chi0": 0.0, "sigma": "norm"},
    ),
    "decoupled_2d": _Family(
        n=2,
        defaults={"a": [0.0, 0.0], "b": [1.0, 1.0], "c": [1.0, 1.0], "d": [0.0, 0.0],
                  "e_u": [0.0, 0.0], "e_v": [0.0, 0.0], "f0": [0.0, 0.0], "chi0": 0.0,
                  "sigma": "terminal"},
    ),
}


@dataclass(frozen=True, eq=False)
class GameDynamics:
    catalog_id: str
    params: Mapping[str, Any]
    P: np.ndarray                # (|P|, n)
    Q: np.ndarray                # (|Q|, n)
    c_star: float
    n: int
    # resolved linear form
    a: np.ndarray = field(repr=False, default=None)
    b: np.ndarray = field(repr=False, default=None)
    c: np.ndarray = field(repr=False, default=None)
    d: np.ndarray = field(repr=False, default=None)
    e_u: np.ndarray = field(repr=False, default=None)
    e_v: np.ndarray = field(repr=False, default=None)
    f0: np.ndarray = field(repr=False, default=None)
    chi0: float = 0.0
    sigma_mode: str = "terminal"

    # ── pointwise data ──────────────────────────────────────────────────────
    def f(self, t: float, x, u, v) -> np.ndarray:
        x, u, v = (np.asarray(z, dtype=float).reshape(self.n) for z in (x, u, v))
        return self.f0 + self.a * x + self.b * u + self.c * v

    def chi(self, t: float, x, u, v) -> float:
        x, u, v = (np.asarray(z, dtype=float).reshape(self.n) for z in (x, u, v))
        return float(self.chi0 + self.d @ x + self.e_u @ u + self.e_v @ v)

    def f_grid(self, t: float, x) -> np.ndarray:
        """f over all control pairs, shape (|P|, |Q|, n)."""
        base = self.f0 + self.a * np.asarray(x, dtype=float).reshape(self.n)
        return base[None, None, :] + (self.P * self.b)[:, None, :] + (self.Q * self.c)[None, :, :]

    def chi_grid(self, t: float, x) -> np.ndarray:
        base = self.chi0 + float(self.d @ np.asarray(x, dtype=float).reshape(self.n))
        return base + (self.P @ self.e_u)[:, None] + (self.Q @ self.e_v)[None, :]

    def sigma(self, path: SampledPath) -> float:
        xT = path.node_values[-1]
        if self.sigma_mode == "terminal":
            return float(xT[0])
        if self.sigma_mode == "norm":
            return float(np.linalg.norm(xT))
        return float(trapezoid(path.node_values[:, 0], path.grid.nodes) / path.T)

    # ── declared constants and flags ────────────────────────────────────────
    @property
    def lambda_star(self) -> float:
        """Lipschitz constant in x of ‖f‖ + |χ| (condition (ii))."""
        return float(np.max(np.abs(self.a)) + np.linalg.norm(self.d))

    def lambda_sigma(self, T: float) -> float:
        """Declared λ^* of condition (v) for the chosen terminal cost."""
        return 1.0 / T if self.sigma_mode == "mean" else 1.0

    def growth_bound(self) -> float:
        """Smallest c with ‖f‖ <= c(1 + ‖x‖) implied by the linear form."""
        drift = np.linalg.norm(self.f_grid(0.0, np.zeros(self.n)), axis=2).max()
        return float(max(np.max(np.abs(self.a)), drift))

    @property
    def separable(self) -> bool:
        """f and χ split into a u-part plus a v-part over the control grid."""
        for x in (np.zeros(self.n), np.ones(self.n)):
            for g in (self.f_grid(0.0, x), self.chi_grid(0.0, x)):
                # mixed second difference over (u, v) vanishes iff g = g_u + g_v
                mix = g - g[:, :1] - g[:1, :] + g[:1, :1]
                if np.max(np.abs(mix)) > 1e-12 * (1.0 + float(np.max(np.abs(g)))):
                    return False
        return True

    @property
    def affine_payoff(self) -> bool:
        """Bolza cost affine in the control sequence: tree upper = lower."""
        return self.sigma_mode in ("terminal", "mean")

    def describe(self) -> dict[str, Any]:
        return {
            "catalog": self.catalog_id,
            "params": dict(self.params),
            "P": self.P.tolist(),
            "Q": self.Q.tolist(),
            "c_star": self.c_star,
        }


def _vec(name: str, value, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.size != n:
        raise DomainError(f"dynamics: param {name} must have {n} components, got {arr.size}")
    return arr


def _control_grid(name: str, pts, n: int) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.size == 0:
        raise DomainError(f"dynamics: control set {name} must be nonempty")
    if n == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DomainError(f"dynamics: control set {name} must hold {n}-vectors")
    return arr


def build_dynamics(catalog_id: str, params: Mapping[str, Any] | None, P: Sequence, Q: Sequence,
                   c_star: float) -> GameDynamics:
    family = CATALOG.get(catalog_id)
    if family is None:
        raise DomainError(f"dynamics: unknown catalog entry {catalog_id!r} (known: {sorted(CATALOG)})")
    params = dict(params or {})
    unknown = set(params) - set(family.defaults)
    if unknown:
        raise DomainError(f"dynamics: {catalog_id} does not take params {sorted(unknown)}")
    if not float(c_star) > 0.0:
        raise DomainError(f"dynamics: c_star must be positive, got {c_star!r}")
    merged = {**family.defaults, **params, **family.fixed}
    n = family.n
    sigma_mode = str(merged["sigma"])
    if sigma_mode not in SIGMA_MODES:
        raise DomainError(f"dynamics: sigma must be one of {SIGMA_MODES}, got {sigma_mode!r}")
    dyn = GameDynamics(
        catalog_id=catalog_id,
        params=params,
        P=_control_grid("P", P, n),
        Q=_control_grid("Q", Q, n),
        c_star=float(c_star),
        n=n,
        a=_vec("a", merged["a"], n),
        b=_vec("b", merged["b"], n),
        c=_vec("c", merged["c"], n),
        d=_vec("d", merged["d"], n),
        e_u=_vec("e_u", merged["e_u"], n),
        e_v=_vec("e_v", merged["e_v"], n),
        f0=_vec("f0", merged["f0"], n),
        chi0=float(merged["chi0"]),
        sigma_mode=sigma_mode,
    )
    _LOG.debug("[dynamics] %s n=%d |P|=%d |Q|=%d", catalog_id, n, len(dyn.P), len(dyn.Q))
    return dyn


# ── Hamiltonian ─────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class HamiltonianEval:
    value: float
    argmin_u: np.ndarray
    argmax_v: np.ndarray
    isaacs_gap: float
    u_index: int
    v_index: int


def payoff_matrix(dyn: GameDynamics, t: float, x, s) -> np.ndarray:
    s = np.asarray(s, dtype=float).reshape(dyn.n)
    return dyn.f_grid(t, x) @ s + dyn.chi_grid(t, x)


def hamiltonian(dyn: GameDynamics, t: float, x, s) -> HamiltonianEval:
    m = payoff_matrix(dyn, t, x, s)
    row_max = m.max(axis=1)
    i = int(np.argmin(row_max))          # first index on ties
    j = int(np.argmax(m[i]))
    maxmin = float(m.min(axis=0).max())
    value = float(row_max[i])
    return HamiltonianEval(value, dyn.P[i].copy(), dyn.Q[j].copy(), value - maxmin, i, j)


# ── assumption checks ───────────────────────────────────────────────────────
@dataclass(frozen=True)
class SampleSpec:
    T: float = 1.0
    radius: float = 5.0
    s_radius: float = 5.0
    points: int = 64
    paths: int = 16
    alpha: float = 0.5
    path_cells: int = 64
    k: int = 2


def _ball(rng: np.random.Generator, n: int, radius: float, count: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, (count, n)) * radius / np.sqrt(n)


def _integral_distance(x: SampledPath, y: SampledPath) -> float:
    d = np.linalg.norm(x.node_values - y.node_values, axis=1)
    return float(d[-1] + trapezoid(d, x.grid.nodes))


def validate_assumptions(dyn: GameDynamics, spec: SampleSpec, rng: np.random.Generator) -> list[CheckReport]:
    n = dyn.n
    ts = rng.uniform(0.0, spec.T, spec.points)
    xs = _ball(rng, n, spec.radius, spec.points)
    ys = _ball(rng, n, spec.radius, spec.points)
    base = {"catalog": dyn.catalog_id, "points": spec.points, "radius": spec.radius}
    reports: list[CheckReport] = []

    # (i) continuity: response to tiny state perturbations
    h = 1e-7
    cont = 0.0
    for t, x in zip(ts, xs):
        dx = h * np.ones(n) / np.sqrt(n)
        df = np.linalg.norm(dyn.f_grid(t, x + dx) - dyn.f_grid(t, x), axis=2)
        dchi = np.abs(dyn.chi_grid(t, x + dx) - dyn.chi_grid(t, x))
        cont = max(cont, float(np.max(df + dchi)))
    reports.append(CheckReport.info("assumption_continuity", {**base, "h": h}, cont,
                                    note="max change of |f|+|chi| under a perturbation of size h"))

    # (ii) Lipschitz in x, all control pairs
    lam = 0.0
    for t, x, y in zip(ts, xs, ys):
        dist = float(np.linalg.norm(x - y))
        if dist == 0.0:
            continue
        num = (np.linalg.norm(dyn.f_grid(t, x) - dyn.f_grid(t, y), axis=2)
               + np.abs(dyn.chi_grid(t, x) - dyn.chi_grid(t, y)))
        lam = max(lam, float(num.max()) / dist)
    reports.append(CheckReport.inequality("assumption_lipschitz", base, lam, dyn.lambda_star,
                                          1e-9 * (1.0 + dyn.lambda_star)))

    # (iii) growth, sampled further out than the Lipschitz ball
    far = np.vstack([xs, 20.0 * xs, np.zeros((1, n))])
    ratios = np.array([np.linalg.norm(dyn.f_grid(0.0, x), axis=2).max() / (1.0 + np.linalg.norm(x))
                       for x in far])
    w = int(np.argmax(ratios))
    reports.append(CheckReport.inequality(
        "assumption_growth", base, float(ratios[w]), dyn.c_star, 1e-12 * dyn.c_star,
        extra={"witness_x": far[w].tolist()},
    ))

    # (iv) Isaacs gap
    ss = _ball(rng, n, spec.s_radius, spec.points)
    gap = max(hamiltonian(dyn, t, x, s).isaacs_gap for t, x, s in zip(ts, xs, ss))
    reports.append(CheckReport.inequality("assumption_isaacs", {**base, "separable": dyn.separable},
                                          gap, 0.0, 1e-12))

    # (v) terminal cost over a path sample set; the estimate is only a lower bound
    grid = Grid.uniform(spec.path_cells, spec.T)
    pool = [random_path(rng, grid, spec.alpha, n, spec.k, dyn.c_star) for _ in range(spec.paths)]
    lam_sigma = 0.0
    for i in range(len(pool)):
        for j in range(i + 1, len(pool)):
            den = _integral_distance(pool[i], pool[j])
            if den > 0.0:
                lam_sigma = max(lam_sigma, abs(dyn.sigma(pool[i]) - dyn.sigma(pool[j])) / den)
    reports.append(CheckReport.info("assumption_terminal_lipschitz", {**base, "paths": spec.paths},
                                    lam_sigma, dyn.lambda_sigma(spec.T), note="sampled lower bound"))
    return reports


def hamiltonian_properties(dyn: GameDynamics, spec: SampleSpec, rng: np.random.Generator) -> list[CheckReport]:
    n = dyn.n
    ts = rng.uniform(0.0, spec.T, spec.points)
    xs = _ball(rng, n, spec.radius, spec.points)
    ys = _ball(rng, n, spec.radius, spec.points)
    ss = _ball(rng, n, spec.s_radius, spec.points)
    rs = _ball(rng, n, spec.s_radius, spec.points)
    base = {"catalog": dyn.catalog_id, "points": spec.points, "radius": spec.radius}

    def worst(pairs: list[tuple[float, float]]) -> tuple[float, float]:
        return min(pairs, key=lambda lr: lr[1] - lr[0])

    jj, jjj, cont = [], [], 0.0
    for t, x, y, s, r in zip(ts, xs, ys, ss, rs):
        hs = hamiltonian(dyn, t, x, s).value
        jj.append((abs(hs - hamiltonian(dyn, t, x, r).value),
                   dyn.c_star * (1.0 + np.linalg.norm(x)) * np.linalg.norm(s - r)))
        jjj.append((abs(hs - hamiltonian(dyn, t, y, s).value),
                    dyn.lambda_star * (1.0 + np.linalg.norm(s)) * np.linalg.norm(x - y)))
        cont = max(cont, abs(hamiltonian(dyn, t, x + 1e-7, s).value - hs))

    reports = [CheckReport.info("hamiltonian_continuity", base, cont)]
    lhs, rhs = worst(jj)
    reports.append(CheckReport.inequality("hamiltonian_costate_lipschitz", base, lhs, rhs,
                                          1e-12 * (1.0 + rhs)))
    lhs, rhs = worst(jjj)
    reports.append(CheckReport.inequality("hamiltonian_state_lipschitz", base, lhs, rhs,
                                          1e-12 * (1.0 + rhs)))
    return reports


HamiltonianFn = Callable[[float, np.ndarray, np.ndarray], float]


def hamiltonian_value_fn(dyn: GameDynamics) -> HamiltonianFn:
    return lambda t, x, s: hamiltonian(dyn, t, x, s).value
