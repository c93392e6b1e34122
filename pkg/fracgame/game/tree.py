# fracgame/game/tree.py
"""Trajectory simulation and brute-force game values on control scenario trees."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from fracgame.calculus.fraccalc import Grid, convolution_weights
from fracgame.calculus.paths import SampledPath
from fracgame.core.errors import AlignmentError, BudgetError, DivergenceError, DomainError
from fracgame.game.dynamics import GameDynamics, hamiltonian

_LOG = logging.getLogger("fracgame.tree")

OVERFLOW_GUARD = 1e6
TREE_BUDGET = 10 ** 7

PathFunctional = Callable[[float, SampledPath], float]


# ── schedules ───────────────────────────────────────────────────────────────
def decision_split(start: int, N: int, K: int) -> tuple[int, ...]:
    """Decision node indices from `start` to N in K steps.

    The first (R mod K) steps take ⌈R/K⌉ fine cells, the rest ⌊R/K⌋, so the
    split seen from the next decision node with K-1 steps is the same.
    """
    R = N - start
    if K < 0 or (K == 0 and R > 0):
        raise AlignmentError(f"tree: K={K} decision steps cannot cover {R} cells")
    if R < K:
        raise AlignmentError(f"tree: {R} fine cells cannot hold K={K} decision steps")
    if K == 0:
        return (start,)
    q, r = divmod(R, K)
    nodes = [start]
    for k in range(K):
        nodes.append(nodes[-1] + q + (1 if k < r else 0))
    return tuple(nodes)


@dataclass(frozen=True)
class ControlSchedule:
    nodes: tuple[int, ...]       # decision node indices, K + 1 of them
    u: tuple[int, ...]           # index into P per decision cell
    v: tuple[int, ...]           # index into Q per decision cell

    def __post_init__(self):
        if not (len(self.u) == len(self.v) == len(self.nodes) - 1):
            raise DomainError("schedule: one (u, v) choice per decision cell")

    @property
    def K(self) -> int:
        return len(self.u)

    def cell_of(self, i: int) -> int:
        """Decision cell containing fine cell i."""
        return int(np.searchsorted(self.nodes, i, side="right")) - 1

    def points(self, dyn: GameDynamics) -> dict[str, list]:
        return {"u": [dyn.P[i].tolist() for i in self.u], "v": [dyn.Q[j].tolist() for j in self.v]}


def constant_schedule(grid: Grid, t: float, K: int, u: int = 0, v: int = 0) -> ControlSchedule:
    nodes = decision_split(grid.index_of(t), grid.N, K)
    return ControlSchedule(nodes, (u,) * K, (v,) * K)


# ── simulation ──────────────────────────────────────────────────────────────
class _State:
    """Mutable trajectory prefix used while stepping; copied per tree branch."""
    __slots__ = ("f", "y", "i")

    def __init__(self, f: np.ndarray, y: np.ndarray, i: int):
        self.f, self.y, self.i = f, y, i

    @classmethod
    def from_base(cls, base: SampledPath, i: int) -> "_State":
        f = np.zeros_like(base.caputo)
        f[:i] = base.caputo[:i]
        y = np.zeros((base.grid.N + 1, base.n))
        y[: i + 1] = base.node_values[: i + 1]
        return cls(f, y, i)

    def copy(self) -> "_State":
        return _State(self.f.copy(), self.y.copy(), self.i)


def _advance(dyn: GameDynamics, base: SampledPath, W: np.ndarray, st: _State, stop: int,
             u: np.ndarray, v: np.ndarray) -> float:
    """Fractional explicit Euler from st.i to `stop`; returns the trapezoid running cost."""
    nodes = base.grid.nodes
    run = 0.0
    for i in range(st.i, stop):
        tau = nodes[i]
        st.f[i] = dyn.f(tau, st.y[i], u, v)
        st.y[i + 1] = base.x0 + W[i + 1, : i + 1] @ st.f[: i + 1]
        if not np.all(np.isfinite(st.y[i + 1])) or np.linalg.norm(st.y[i + 1]) >= OVERFLOW_GUARD:
            raise DivergenceError(f"simulate: |y| >= {OVERFLOW_GUARD:g} at t={nodes[i + 1]!r}")
        h = nodes[i + 1] - tau
        run += 0.5 * h * (dyn.chi(tau, st.y[i], u, v) + dyn.chi(nodes[i + 1], st.y[i + 1], u, v))
    st.i = stop
    return run


def _as_path(base: SampledPath, st: _State) -> SampledPath:
    return SampledPath(base.alpha, base.x0, base.grid, st.f)


def simulate(dyn: GameDynamics, base: SampledPath, t: float, sched: ControlSchedule,
             fine_grid: Grid | None = None) -> SampledPath:
    """Trajectory from (t, base) under `sched`; stores the realized f as its Caputo samples."""
    if fine_grid is not None and not fine_grid.same_as(base.grid):
        raise AlignmentError("simulate: fine grid must be the grid of the base path")
    i0 = base.grid.index_of(t)
    if sched.nodes[0] != i0 or sched.nodes[-1] != base.grid.N:
        raise AlignmentError("simulate: schedule must span [t, T] on the fine grid")
    W = convolution_weights(base.grid, base.alpha).weights
    st = _State.from_base(base, i0)
    for k in range(sched.K):
        _advance(dyn, base, W, st, sched.nodes[k + 1], dyn.P[sched.u[k]], dyn.Q[sched.v[k]])
    return _as_path(base, st)


def cost(dyn: GameDynamics, traj: SampledPath, t: float, sched: ControlSchedule) -> float:
    """σ(traj) + ∫_t^T χ dτ with the trapezoid rule on the fine grid."""
    i0 = traj.grid.index_of(t)
    nodes, y = traj.grid.nodes, traj.node_values
    run = 0.0
    for i in range(i0, traj.grid.N):
        k = sched.cell_of(i)
        u, v = dyn.P[sched.u[k]], dyn.Q[sched.v[k]]
        run += 0.5 * (nodes[i + 1] - nodes[i]) * (dyn.chi(nodes[i], y[i], u, v)
                                                  + dyn.chi(nodes[i + 1], y[i + 1], u, v))
    return dyn.sigma(traj) + run


# ── value trees ─────────────────────────────────────────────────────────────
@dataclass
class ValueTree:
    mode: str
    t: float
    decision_nodes: tuple[int, ...]
    grid: Grid
    upper_value: float
    lower_value: float
    upper_schedule: ControlSchedule
    lower_schedule: ControlSchedule
    leaves: int
    upper_path: SampledPath | None = field(default=None, repr=False)
    lower_path: SampledPath | None = field(default=None, repr=False)

    @property
    def value(self) -> float:
        return self.upper_value if self.mode == "upper" else self.lower_value

    @property
    def bracket(self) -> float:
        return self.upper_value - self.lower_value

    def to_dict(self, dyn: GameDynamics | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "t": self.t,
            "decision_grid": [float(self.grid.nodes[i]) for i in self.decision_nodes],
            "upper_value": self.upper_value,
            "lower_value": self.lower_value,
            "leaves": self.leaves,
            "upper_schedule": {"u": list(self.upper_schedule.u), "v": list(self.upper_schedule.v)},
            "lower_schedule": {"u": list(self.lower_schedule.u), "v": list(self.lower_schedule.v)},
        }
        if dyn is not None:
            out["upper_controls"] = self.upper_schedule.points(dyn)
            out["lower_controls"] = self.lower_schedule.points(dyn)
        return out

    def csv_rows(self) -> list[list[Any]]:
        """(witness, node, time, state...) for plotting."""
        rows: list[list[Any]] = []
        for name, path in (("upper", self.upper_path), ("lower", self.lower_path)):
            if path is None:
                continue
            start = self.decision_nodes[0]
            for i in range(start, self.grid.N + 1):
                rows.append([name, i, float(self.grid.nodes[i])] + [float(v) for v in path.node_values[i]])
        return rows


def _tree_budget(dyn: GameDynamics, K: int) -> int:
    return (len(dyn.P) * len(dyn.Q)) ** K


class _Node(NamedTuple):
    up: float
    lo: float
    up_plan: tuple[tuple[int, int], ...]
    lo_plan: tuple[tuple[int, int], ...]


def _solve(dyn: GameDynamics, base: SampledPath, W: np.ndarray, nodes: Sequence[int], k: int,
           st: _State, counter: list[int]) -> _Node:
    if k == len(nodes) - 1:
        counter[0] += 1
        s = dyn.sigma(_as_path(base, st))
        return _Node(s, s, (), ())
    nP, nQ = len(dyn.P), len(dyn.Q)
    m_up = np.empty((nP, nQ))
    m_lo = np.empty((nP, nQ))
    plans: dict[tuple[int, int], _Node] = {}
    for iu in range(nP):
        for iv in range(nQ):
            child = st.copy()
            run = _advance(dyn, base, W, child, nodes[k + 1], dyn.P[iu], dyn.Q[iv])
            sub = _solve(dyn, base, W, nodes, k + 1, child, counter)
            m_up[iu, iv] = run + sub.up
            m_lo[iu, iv] = run + sub.lo
            plans[(iu, iv)] = sub
    # upper: minimizer commits first; lower: maximizer commits first
    iu_up = int(np.argmin(m_up.max(axis=1)))
    iv_up = int(np.argmax(m_up[iu_up]))
    iv_lo = int(np.argmax(m_lo.min(axis=0)))
    iu_lo = int(np.argmin(m_lo[:, iv_lo]))
    return _Node(
        float(m_up[iu_up, iv_up]),
        float(m_lo[iu_lo, iv_lo]),
        ((iu_up, iv_up),) + plans[(iu_up, iv_up)].up_plan,
        ((iu_lo, iv_lo),) + plans[(iu_lo, iv_lo)].lo_plan,
    )


def value(dyn: GameDynamics, base: SampledPath, t: float, K: int, mode: str = "upper",
          *, budget: int = TREE_BUDGET, witnesses: bool = True) -> ValueTree:
    """Upper and lower values on the K-step scenario tree rooted at (t, base)."""
    if mode not in ("upper", "lower"):
        raise DomainError(f"value: mode must be 'upper' or 'lower', got {mode!r}")
    i0 = base.grid.index_of(t)
    if i0 == base.grid.N:
        K = 0
    nodes = decision_split(i0, base.grid.N, K)
    required = _tree_budget(dyn, K)
    if required > budget:
        raise BudgetError(required, budget, "value tree")
    W = convolution_weights(base.grid, base.alpha).weights
    counter = [0]
    root = _solve(dyn, base, W, nodes, 0, _State.from_base(base, i0), counter)
    up_sched = ControlSchedule(nodes, tuple(p[0] for p in root.up_plan), tuple(p[1] for p in root.up_plan))
    lo_sched = ControlSchedule(nodes, tuple(p[0] for p in root.lo_plan), tuple(p[1] for p in root.lo_plan))
    tree = ValueTree(mode, float(base.grid.nodes[i0]), nodes, base.grid, root.up, root.lo,
                     up_sched, lo_sched, counter[0])
    if witnesses:
        tree.upper_path = simulate(dyn, base, t, up_sched)
        tree.lower_path = simulate(dyn, base, t, lo_sched)
    _LOG.debug("[tree] t=%s K=%d leaves=%d upper=%r lower=%r", t, K, counter[0], root.up, root.lo)
    return tree


def dpp_residual(dyn: GameDynamics, base: SampledPath, t: float, K: int) -> float:
    """Gap between the tree value and a one-step recomposition over fresh sub-trees."""
    tree = value(dyn, base, t, K, witnesses=False)
    nodes = tree.decision_nodes
    if len(nodes) == 1:
        return abs(tree.upper_value - dyn.sigma(base)) if nodes[0] == base.grid.N else 0.0
    W = convolution_weights(base.grid, base.alpha).weights
    t1 = float(base.grid.nodes[nodes[1]])
    nP, nQ = len(dyn.P), len(dyn.Q)
    m_up = np.empty((nP, nQ))
    m_lo = np.empty((nP, nQ))
    for iu in range(nP):
        for iv in range(nQ):
            st = _State.from_base(base, nodes[0])
            run = _advance(dyn, base, W, st, nodes[1], dyn.P[iu], dyn.Q[iv])
            sub = value(dyn, _as_path(base, st), t1, K - 1, witnesses=False)
            m_up[iu, iv] = run + sub.upper_value
            m_lo[iu, iv] = run + sub.lower_value
    up = float(m_up.max(axis=1).min())
    lo = float(m_lo.min(axis=0).max())
    return max(abs(tree.upper_value - up), abs(tree.lower_value - lo))


# ── minimax (M±) witness ────────────────────────────────────────────────────
class MinimaxWitness(NamedTuple):
    path: SampledPath
    residual: float


def minimax_witness(phi: PathFunctional, t: float, base: SampledPath, s, sign: str,
                    dyn: GameDynamics,
                    ham: Callable[[float, np.ndarray, np.ndarray], float] | None = None) -> MinimaxWitness:
    """Greedy search in Y_* for a path certifying (M+) or (M-) at (t, base).

    Tracks Ψ(τ) = φ(τ, y) − ∫_t^τ (⟨s, f⟩ − H(ξ, y(ξ), s)) dξ and returns the worst
    violation of Ψ <= φ(t, x) (plus) or Ψ >= φ(t, x) (minus) over nodes after t.
    """
    if sign not in ("plus", "minus"):
        raise DomainError(f"minimax_witness: sign must be 'plus' or 'minus', got {sign!r}")
    if ham is None:
        ham = lambda tau, x, sv: hamiltonian(dyn, tau, x, sv).value  # noqa: E731
    s = np.asarray(s, dtype=float).reshape(base.n)
    grid, nodes = base.grid, base.grid.nodes
    i0 = grid.index_of(t)
    W = convolution_weights(grid, base.alpha).weights
    st = _State.from_base(base, i0)
    phi0 = float(phi(float(nodes[i0]), _as_path(base, st)))
    integral = 0.0
    worst = -np.inf
    for i in range(i0, grid.N):
        tau, h = nodes[i], nodes[i + 1] - nodes[i]
        cands = np.vstack([dyn.f_grid(tau, st.y[i]).reshape(-1, base.n), np.zeros((1, base.n))])
        bound = dyn.c_star * (1.0 + np.linalg.norm(st.y[i]))
        norms = np.linalg.norm(cands, axis=1)
        scale = np.where(norms > bound, bound / np.where(norms > 0.0, norms, 1.0), 1.0)
        cands = cands * scale[:, None]
        h_here = ham(tau, st.y[i], s)
        best = None
        for c in cands:
            trial = st.copy()
            trial.f[i] = c
            trial.y[i + 1] = base.x0 + W[i + 1, : i + 1] @ trial.f[: i + 1]
            step = float(s @ c) * h - 0.5 * h * (h_here + ham(nodes[i + 1], trial.y[i + 1], s))
            psi = float(phi(float(nodes[i + 1]), _as_path(base, trial))) - (integral + step)
            better = best is None or (psi < best[0] if sign == "plus" else psi > best[0])
            if better:
                best = (psi, step, trial)
        psi, step, trial = best
        trial.i = i + 1
        st = trial
        integral += step
        worst = max(worst, psi - phi0 if sign == "plus" else phi0 - psi)
    if worst == -np.inf:
        worst = 0.0
    return MinimaxWitness(_as_path(base, st), float(worst))
