# fracgame/calculus/paths.py
"""The path space AC^α, stored by Caputo derivative.

A SampledPath is x0 plus one Caputo sample per grid cell; evaluation is the
exact fractional integral of that piecewise-constant derivative, so the
representation identity holds without discretization error.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from fracgame.calculus.fraccalc import Grid, cell_moments, convolution_weights, gamma_fn
from fracgame.core.errors import AlignmentError, DomainError
from fracgame.core.reports import CheckReport

_LOG = logging.getLogger("fracgame.paths")

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampledPath:
    alpha: float
    x0: np.ndarray               # (n,)
    grid: Grid
    caputo: np.ndarray           # (N, n), sample j lives on [τ_j, τ_{j+1})

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 < alpha <= 1.0:
            raise DomainError(f"path: alpha must lie in (0, 1], got {alpha!r}")
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        f = np.array(self.caputo, dtype=float)
        if f.ndim == 1:
            f = f.reshape(-1, 1) if x0.size == 1 else f.reshape(1, -1)
        if f.shape != (self.grid.N, x0.size):
            raise AlignmentError(
                f"path: caputo samples must have shape {(self.grid.N, x0.size)}, got {f.shape}"
            )
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(x0))):
            raise DomainError("path: samples must be finite (bounded Caputo derivative)")
        x0.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "caputo", f)

    @property
    def n(self) -> int:
        return self.x0.size

    @property
    def T(self) -> float:
        return self.grid.T

    @cached_property
    def node_values(self) -> np.ndarray:
        """x(τ_i) at every node, shape (N+1, n)."""
        w = convolution_weights(self.grid, self.alpha).weights
        vals = self.x0[None, :] + w @ self.caputo
        vals[0] = self.x0
        vals.setflags(write=False)
        return vals

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha1()
        h.update(np.float64(self.alpha).tobytes())
        h.update(self.x0.tobytes())
        h.update(self.grid.key())
        h.update(self.caputo.tobytes())
        return h.hexdigest()

    # serialization: {alpha, x0, nodes, caputo}
    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "x0": [float(v) for v in self.x0],
            "nodes": self.grid.to_list(),
            "caputo": [[float(v) for v in row] for row in self.caputo],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SampledPath":
        missing = {"alpha", "x0", "nodes", "caputo"} - set(data)
        if missing:
            raise DomainError(f"path json: missing keys {sorted(missing)}")
        return cls(float(data["alpha"]), np.asarray(data["x0"], dtype=float),
                   Grid(np.asarray(data["nodes"], dtype=float)),
                   np.asarray(data["caputo"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "SampledPath":
        return cls.from_dict(json.loads(text))


def constant_path(x0, grid: Grid, alpha: float) -> SampledPath:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    return SampledPath(alpha, x0, grid, np.zeros((grid.N, x0.size)))


def path_from_function(x0, grid: Grid, alpha: float, f) -> SampledPath:
    """Path whose Caputo sample on each cell is f(left node)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    samples = np.array([np.broadcast_to(np.asarray(f(tau), dtype=float), x0.shape)
                        for tau in grid.nodes[:-1]])
    return SampledPath(alpha, x0, grid, samples)


# ── evaluation ──────────────────────────────────────────────────────────────
def eval_many(path: SampledPath, points) -> np.ndarray:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    tol = 1e-12 * max(1.0, path.T)
    if np.any(pts < -tol) or np.any(pts > path.T + tol):
        raise DomainError(f"eval: times must lie in [0, {path.T}]")
    pts = np.clip(pts, 0.0, path.T)
    out = path.x0[None, :] + cell_moments(pts, path.grid.nodes, path.alpha) @ path.caputo
    out[pts == 0.0] = path.x0
    return out


def eval(path: SampledPath, tau: float) -> np.ndarray:  # noqa: A001 - domain name
    return eval_many(path, [tau])[0]


def caputo(path: SampledPath, tau: float) -> np.ndarray:
    tau = float(tau)
    if tau < 0.0 or tau > path.T:
        raise DomainError(f"caputo: tau={tau!r} outside [0, {path.T}]")
    j = int(np.searchsorted(path.grid.nodes, tau, side="right")) - 1
    return path.caputo[min(j, path.grid.N - 1)].copy()


def l1_caputo(path: SampledPath) -> np.ndarray:
    """L1-scheme Caputo derivative of the node values, at nodes 1..N.

    Independent of the stored samples: differentiates eval output only.
    """
    a = path.alpha
    nodes = path.grid.nodes
    x = path.node_values
    slopes = np.diff(x, axis=0) / path.grid.steps[:, None]
    d = np.clip(nodes[1:, None] - nodes[None, :], 0.0, None) ** (1.0 - a)
    k = (d[:, :-1] - d[:, 1:]) / gamma_fn(2.0 - a)
    return k @ slopes


# ── extensions ──────────────────────────────────────────────────────────────
def _tail_array(path: SampledPath, i: int, tail) -> np.ndarray:
    cells = path.grid.N - i
    arr = np.asarray(tail, dtype=float)
    if arr.ndim <= 1 and arr.size == path.n:
        return np.broadcast_to(arr.reshape(1, -1), (cells, path.n))
    if arr.size != cells * path.n:
        raise AlignmentError(f"extend: tail must have shape {(cells, path.n)}, got {arr.shape}")
    return arr.reshape(cells, path.n)


def extend(path: SampledPath, t: float, tail) -> SampledPath:
    """Member of Y(t, x): same history on [0, t], Caputo samples `tail` after t."""
    i = path.grid.index_of(t)
    f = np.array(path.caputo)
    f[i:] = _tail_array(path, i, tail)
    return SampledPath(path.alpha, path.x0, path.grid, f)


def freeze(path: SampledPath, t: float) -> SampledPath:
    """a(·|t, x): zero Caputo derivative after t."""
    i = path.grid.index_of(t)
    if i == path.grid.N:
        return path
    f = np.array(path.caputo)
    f[i:] = 0.0
    return SampledPath(path.alpha, path.x0, path.grid, f)


# ── norms ───────────────────────────────────────────────────────────────────
def sup_norm(path: SampledPath) -> float:
    return float(np.max(np.linalg.norm(path.node_values, axis=1)))


def sup_distance(p1: SampledPath, p2: SampledPath) -> float:
    if p1.grid.same_as(p2.grid):
        d = p1.node_values - p2.node_values
    else:
        nodes = p1.grid.merged(p2.grid).nodes
        d = eval_many(p1, nodes) - eval_many(p2, nodes)
    return float(np.max(np.linalg.norm(d, axis=1)))


# ── X_k / Y_* ───────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class XkMembership:
    k: int
    c_star: float
    verdict: bool
    worst_margin: float


def _growth_excess(path: SampledPath, c_scale: float, start: int = 0) -> np.ndarray:
    x = path.node_values[start:-1]
    return np.linalg.norm(path.caputo[start:], axis=1) - c_scale * (1.0 + np.linalg.norm(x, axis=1))


def xk_check(path: SampledPath, k: int, c_star: float) -> XkMembership:
    excess = _growth_excess(path, k * c_star)
    worst = float(np.max(excess))
    scale = MEMBERSHIP_TOL * max(1.0, k * c_star)
    ok = bool(np.linalg.norm(path.x0) <= k + MEMBERSHIP_TOL and worst <= scale)
    return XkMembership(int(k), float(c_star), ok, worst)


def ystar_check(path: SampledPath, t: float, c_star: float) -> tuple[bool, float]:
    """Growth bound ‖f‖ <= c_*(1 + ‖y‖) on the cells after t."""
    i = path.grid.index_of(t)
    if i == path.grid.N:
        return True, -float(c_star)
    worst = float(np.max(_growth_excess(path, c_star, start=i)))
    return worst <= MEMBERSHIP_TOL * max(1.0, c_star), worst


def holder_check(path: SampledPath, t: float, tail, tau: float, *, slack: float = 1e-10) -> CheckReport:
    """sup ‖y − a(·|t,x)‖ <= M(τ−t)^α/Γ(α+1) for a tail supported on [t, τ]."""
    i = path.grid.index_of(t)
    j = path.grid.index_of(tau)
    if j < i:
        raise DomainError(f"holder_check: tau={tau!r} precedes t={t!r}")
    tail = np.array(_tail_array(path, i, tail))
    tail[j - i:] = 0.0
    y = extend(path, t, tail)
    a = freeze(path, t)
    lhs = sup_distance(y, a)
    M = float(np.max(np.linalg.norm(tail, axis=1))) if tail.size else 0.0
    rhs = M * (path.grid.nodes[j] - path.grid.nodes[i]) ** path.alpha / gamma_fn(path.alpha + 1.0)
    inputs = {"path": path.digest[:12], "t": float(t), "tau": float(tau), "M": M}
    return CheckReport.inequality("freeze_holder", inputs, lhs, rhs, slack)


def freeze_bound_check(path: SampledPath, t: float, *, refine: int = 4) -> CheckReport:
    """sup ‖a(·|t,x)‖ <= max_{[0,t]} ‖x‖, the right side sampled at nodes and `refine` points per cell."""
    i = path.grid.index_of(t)
    nodes = path.grid.nodes[: i + 1]
    seen = np.linalg.norm(path.node_values[: i + 1], axis=1)
    if i > 0:
        dense = np.linspace(0.0, float(nodes[-1]), refine * i + 1)
        seen = np.concatenate([seen, np.linalg.norm(eval_many(path, dense), axis=1)])
    rhs = float(np.max(seen))
    lhs = sup_norm(freeze(path, t))
    return CheckReport.inequality("freeze_bound", {"path": path.digest[:12], "t": float(t)},
                                  lhs, rhs, 1e-14 * (1.0 + rhs))


# ── sampling ────────────────────────────────────────────────────────────────
def random_path(rng: np.random.Generator, grid: Grid, alpha: float, n: int, k: int,
                c_star: float, *, blocks: int = 8, amplitude: float = 0.9) -> SampledPath:
    """Random member of X_k: ‖x0‖ <= amplitude·k, Caputo constant on `blocks` blocks."""
    x0 = rng.uniform(-1.0, 1.0, n) * amplitude * k / np.sqrt(n)
    blocks = max(1, min(int(blocks), grid.N))
    edges = np.linspace(0, grid.N, blocks + 1).round().astype(int)
    f = np.zeros((grid.N, n))
    for b in range(blocks):
        f[edges[b]:edges[b + 1]] = rng.uniform(-1.0, 1.0, n) * amplitude * k * c_star / np.sqrt(n)
    return SampledPath(alpha, x0, grid, f)


def path_library(paths: Iterable[SampledPath], node_times: Sequence[float]) -> list[SampledPath]:
    """Paths plus their frozen extensions at every node time; duplicates dropped.

    Closed under freeze at the given times, which the doubling maximizer relies on.
    """
    out: list[SampledPath] = []
    seen: set[str] = set()
    for p in paths:
        for cand in [p] + [freeze(p, t) for t in node_times]:
            if cand.digest not in seen:
                seen.add(cand.digest)
                out.append(cand)
    _LOG.debug("[paths] library: %d paths", len(out))
    return out
