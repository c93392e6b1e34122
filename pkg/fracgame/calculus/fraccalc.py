# fracgame/calculus/fraccalc.py
"""Special functions and weakly singular quadrature.

Everything here is a pure function of immutable inputs. Quadrature follows
product integration: data are interpolated piecewise-linearly between nodes and
the singular kernel is integrated exactly on every cell.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fracgame.core.errors import AccuracyError, AlignmentError, DivergenceError, DomainError
from fracgame.core.reports import CheckReport

_LOG = logging.getLogger("fracgame.fraccalc")

NODE_TOL = 1e-12

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ── Grid ────────────────────────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        if nodes.size < 2:
            raise DomainError("grid: needs at least one cell (N >= 1)")
        if nodes[0] != 0.0:
            raise DomainError(f"grid: first node must be exactly 0, got {nodes[0]!r}")
        if not np.all(np.diff(nodes) > 0.0):
            raise DomainError("grid: nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, n: int, T: float) -> "Grid":
        if int(n) < 1 or not T > 0:
            raise DomainError(f"grid: need n >= 1 and T > 0, got n={n}, T={T}")
        nodes = np.linspace(0.0, float(T), int(n) + 1)
        nodes[-1] = float(T)
        return cls(nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def index_of(self, t: float) -> int:
        """Index of the node equal to t; off-node times are an error."""
        t = float(t)
        i = int(np.searchsorted(self.nodes, t))
        tol = NODE_TOL * max(1.0, self.T)
        for j in (i - 1, i):
            if 0 <= j <= self.N and abs(self.nodes[j] - t) <= tol:
                return j
        raise AlignmentError(f"grid: t={t!r} is not a grid node")

    def is_node(self, t: float) -> bool:
        try:
            self.index_of(t)
        except AlignmentError:
            return False
        return True

    def same_as(self, other: "Grid") -> bool:
        return self is other or (self.N == other.N and bool(np.array_equal(self.nodes, other.nodes)))

    def merged(self, other: "Grid") -> "Grid":
        if self.same_as(other):
            return self
        if self.T != other.T:
            raise AlignmentError(f"grid: horizons differ ({self.T!r} vs {other.T!r})")
        return Grid(np.union1d(self.nodes, other.nodes))

    def key(self) -> bytes:
        return self.nodes.tobytes()

    def to_list(self) -> list[float]:
        return [float(v) for v in self.nodes]


# ── Special functions ────────────────────────────────────────────────────────
def _check_positive(name: str, x: float) -> float:
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"{name}: argument must be a positive finite real, got {x!r}")
    return x


def _lanczos_sum(z: float) -> float:
    a = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (z + i)
    return a


def log_gamma(x: float) -> float:
    x = _check_positive("log_gamma", x)
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_fn(x: float) -> float:
    x = _check_positive("gamma_fn", x)
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    if x >= 140.0:
        return math.exp(log_gamma(x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _SQRT_2PI * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def beta_fn(a: float, b: float) -> float:
    a = _check_positive("beta_fn", a)
    b = _check_positive("beta_fn", b)
    if a + b < 140.0:
        return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)
    return math.exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b))


def mittag_leffler(alpha: float, z: float, tol: float = 1e-15, max_terms: int = 512) -> float:
    """E_alpha(z) by its power series.

    Stops once terms are decreasing and the next term is below
    tol * max(1, |partial sum|).
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"mittag_leffler: alpha must lie in (0, 1], got {alpha!r}")
    if not tol > 0.0:
        raise DomainError(f"mittag_leffler: tol must be positive, got {tol!r}")
    z = float(z)
    if z == 0.0:
        return 1.0
    log_abs = math.log(abs(z))
    negative = z < 0.0
    total = 0.0
    prev = math.inf
    for k in range(max_terms):
        mag = math.exp(k * log_abs - log_gamma(alpha * k + 1.0))
        total += -mag if (negative and k % 2) else mag
        nxt = math.exp((k + 1) * log_abs - log_gamma(alpha * (k + 1) + 1.0))
        if nxt <= mag <= prev and nxt < tol * max(1.0, abs(total)):
            _LOG.debug("[ml] alpha=%s z=%s converged after %d terms", alpha, z, k + 1)
            return total
        prev = mag
    raise AccuracyError(f"mittag_leffler: no convergence within {max_terms} terms (alpha={alpha}, z={z})")


# ── Convolution weights / cell moments ───────────────────────────────────────
@dataclass(frozen=True, eq=False)
class ConvolutionWeights:
    order: float
    grid: Grid
    weights: np.ndarray          # (N+1, N), row i integrates up to node i

    def row_sums(self) -> np.ndarray:
        return self.weights.sum(axis=1)


def cell_moments(points, nodes, alpha: float) -> np.ndarray:
    """m[i, j] = ((τ_i − τ_j)_+^α − (τ_i − τ_{j+1})_+^α) / Γ(α+1).

    Moment of cell j of `nodes` seen from evaluation point τ_i; cells past the
    point contribute 0 and a partially covered cell uses the same closed form.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    nds = np.asarray(nodes, dtype=float)
    d = np.clip(pts[:, None] - nds[None, :], 0.0, None)
    pw = d ** float(alpha)
    return (pw[:, :-1] - pw[:, 1:]) / gamma_fn(float(alpha) + 1.0)


@lru_cache(maxsize=8)
def _weights_cached(key: bytes, alpha: float) -> np.ndarray:
    nodes = np.frombuffer(key, dtype=float)
    w = cell_moments(nodes, nodes, alpha)
    w.setflags(write=False)
    return w


def convolution_weights(grid: Grid, alpha: float) -> ConvolutionWeights:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"convolution_weights: alpha must lie in (0, 1], got {alpha!r}")
    return ConvolutionWeights(alpha, grid, _weights_cached(grid.key(), alpha))


# ── Product integration ─────────────────────────────────────────────────────
def product_weights(nodes, p: float, singular_at: float, side: str) -> np.ndarray:
    """Node weights for ∫ g(ξ) K(ξ) dξ over [nodes[0], nodes[-1]], g piecewise linear.

    side="right": K = (s − ξ)^{−p} with s >= nodes[-1].
    side="left":  K = (ξ − s)^{−p} with s <= nodes[0].
    """
    p = float(p)
    if p >= 1.0:
        raise DivergenceError(f"product_weights: kernel exponent p={p!r} is not integrable")
    x = np.asarray(nodes, dtype=float)
    a, b = x[:-1], x[1:]
    h = b - a
    if side == "right":
        A = np.clip(singular_at - a, 0.0, None)
        B = np.clip(singular_at - b, 0.0, None)
        m0 = (A ** (1.0 - p) - B ** (1.0 - p)) / (1.0 - p)
        m1 = A * m0 - (A ** (2.0 - p) - B ** (2.0 - p)) / (2.0 - p)
    elif side == "left":
        A = np.clip(a - singular_at, 0.0, None)
        B = np.clip(b - singular_at, 0.0, None)
        m0 = (B ** (1.0 - p) - A ** (1.0 - p)) / (1.0 - p)
        m1 = (B ** (2.0 - p) - A ** (2.0 - p)) / (2.0 - p) - A * m0
    else:
        raise DomainError(f"product_weights: side must be 'left' or 'right', got {side!r}")
    w = np.zeros(x.size)
    w[:-1] += m0 - m1 / h
    w[1:] += m1 / h
    return w


def singular_integral(g, grid: Grid, p: float, *, start: int = 0) -> np.ndarray | float:
    """∫_{τ_start}^T g(ξ)(T − ξ)^{−p} dξ for g sampled on the grid nodes.

    g may be (N+1,) or (N+1, m); the result has the trailing shape.
    """
    p = float(p)
    if p >= 1.0:
        raise DivergenceError(f"singular_integral: p={p!r} >= 1, kernel is not integrable")
    vals = np.asarray(g, dtype=float)
    if vals.shape[0] != grid.N + 1:
        raise AlignmentError(f"singular_integral: {vals.shape[0]} samples for {grid.N + 1} nodes")
    if start >= grid.N:
        return 0.0 if vals.ndim == 1 else np.zeros(vals.shape[1:])
    w = product_weights(grid.nodes[start:], p, grid.T, "right")
    out = np.tensordot(w, vals[start:], axes=(0, 0))
    return float(out) if vals.ndim == 1 else out


def double_singular_integral(g, nodes, gamma: float, p: float) -> np.ndarray | float:
    """∫_t^T g(ξ)(ξ − t)^{γ−1}(T − ξ)^{−p} dξ with t = nodes[0], T = nodes[-1].

    Split at the middle node; each half is integrated against its nearer
    singular factor with the other factor folded into the sampled data.
    A single cell uses exact Beta moments of the linear interpolant.
    """
    gamma, p = float(gamma), float(p)
    if p >= 1.0 or gamma <= 0.0:
        raise DivergenceError(f"double_singular_integral: gamma={gamma!r}, p={p!r} not integrable")
    x = np.asarray(nodes, dtype=float)
    vals = np.asarray(g, dtype=float)
    m = x.size - 1
    if m < 1:
        raise DomainError("double_singular_integral: needs at least one cell")
    t, T = x[0], x[-1]
    if m == 1:
        L = T - t
        i0 = beta_fn(gamma, 1.0 - p) * L ** (gamma - p)
        i1 = beta_fn(gamma + 1.0, 1.0 - p) * L ** (gamma - p)
        out = vals[0] * (i0 - i1) + vals[1] * i1
        return float(out) if vals.ndim == 1 else out
    mid = m // 2
    shape = (-1,) + (1,) * (vals.ndim - 1)
    left_x = x[: mid + 1]
    right_x = x[mid:]
    left_data = vals[: mid + 1] * ((T - left_x) ** (-p)).reshape(shape)
    right_data = vals[mid:] * ((right_x - t) ** (gamma - 1.0)).reshape(shape)
    wl = product_weights(left_x, 1.0 - gamma, t, "left")
    wr = product_weights(right_x, p, T, "right")
    out = np.tensordot(wl, left_data, axes=(0, 0)) + np.tensordot(wr, right_data, axes=(0, 0))
    return float(out) if vals.ndim == 1 else out


def beta_identity_check(gamma: float, t: float, alpha: float, beta: float, q: float,
                        T: float = 1.0, *, cells: int = 512, tol: float = 1e-4) -> CheckReport:
    """Quadrature of ∫_t^T (ξ−t)^{γ−1}(T−ξ)^{−p} dξ against B(γ, 1−p)(T−t)^{γ−p}."""
    p = (1.0 - alpha - beta) * q
    if p >= 1.0:
        raise DomainError(f"beta_identity_check: (1-alpha-beta)q = {p!r} must be < 1")
    if not 0.0 < gamma <= 1.0 or not 0.0 <= t < T:
        raise DomainError(f"beta_identity_check: need gamma in (0,1], t in [0,T), got {gamma!r}, {t!r}")
    nodes = np.linspace(t, T, cells + 1)
    quad = double_singular_integral(np.ones(cells + 1), nodes, gamma, p)
    closed = beta_fn(gamma, 1.0 - p) * (T - t) ** (gamma - p)
    inputs = {"gamma": gamma, "t": t, "alpha": alpha, "beta": beta, "q": q, "T": T, "cells": cells}
    return CheckReport.equality("beta_identity", inputs, quad, closed, tol, relative=True)


def trapezoid(y, x) -> float | np.ndarray:
    """Composite trapezoid rule along the first axis."""
    y = np.asarray(y, dtype=float)
    dx = np.diff(np.asarray(x, dtype=float))
    shape = (-1,) + (1,) * (y.ndim - 1)
    out = (0.5 * (y[1:] + y[:-1]) * dx.reshape(shape)).sum(axis=0)
    return float(out) if y.ndim == 1 else out
