import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from numpy.polynomial import Polynomial
from scipy import special

from fracgame.calculus.fraccalc import Grid, gamma_fn
from fracgame.calculus.paths import constant_path, freeze, path_from_function, random_path
from fracgame.calculus.testfunc import (
    NuParams, TestFunctional, a1, c2, c3, c4, ci_derivative_fd, default_beta, freeze_invariance_check,
    lemma_harness, mu, mu_gradient, nu, nu_parts,
)
from fracgame.core.errors import ConditioningError, DomainError


@pytest.fixture
def pe():
    return NuParams(0.1, 0.5, 0.2)


@pytest.mark.parametrize("kw", [
    {"eps": 0.0, "alpha": 0.5, "beta": 0.1},
    {"eps": 0.1, "alpha": 1.0, "beta": 0.1},
    {"eps": 0.1, "alpha": 0.5, "beta": 0.25},
    {"eps": 0.1, "alpha": 0.5, "beta": 0.0},
    {"eps": 0.1, "alpha": 0.5, "beta": 0.1, "T": -1.0},
])
def test_params_validation(kw):
    with pytest.raises(DomainError):
        NuParams(**kw)


def test_derived_exponents(pe):
    assert pe.q == pytest.approx(4.0 / 3.0)
    assert pe.p == pytest.approx(0.4)
    assert pe.E == pytest.approx(0.1 ** 6)
    assert pe.offset == pytest.approx(pe.C1 * 0.1 ** 4)
    assert pe.C1 == pytest.approx(1.0 + 1.0 / 0.6)
    assert default_beta(0.5) == 0.125
    assert NuParams.with_default_beta(0.1, 0.5).beta == 0.125


def test_constants(pe):
    assert c2(pe) == pytest.approx(2.49535, rel=1e-4)
    theta = 0.25
    q, p = pe.q, pe.p
    B = special.beta(1.0 - 0.5 * q, 1.0 - p)
    expected = q / (special.gamma(0.5) * theta ** 0.5) * (1.0 + B ** (1.0 / q))
    assert c3(pe, theta) == pytest.approx(expected, rel=1e-12)
    assert c4(pe, theta) > 0.0
    with pytest.raises(DomainError):
        c3(pe, 1.0)


def test_a1_is_the_slope_at_the_cutoff(pe):
    theta = 0.3
    B = special.beta(pe.alpha, 1.0 - pe.p)
    g = lambda t: B * (1.0 - t) ** (pe.alpha - pe.p)  # noqa: E731
    h = 1e-6
    slope = abs(g(1.0 - theta + h) - g(1.0 - theta - h)) / (2.0 * h)
    assert a1(pe, theta) == pytest.approx(slope, rel=1e-5)


def test_nu_identities(pe, paths, grid):
    x, y = paths[0], paths[1]
    t, tau = float(grid.nodes[20]), float(grid.nodes[44])
    v = nu(pe, t, x, tau, y)
    assert v >= 0.0
    assert v == pytest.approx(nu(pe, tau, y, t, x), rel=1e-12)
    assert nu(pe, t, x, t, x) == 0.0
    parts = nu_parts(pe, t, x, tau, y)
    assert parts.value == v
    assert parts.terminal >= 0.0 and parts.integral >= 0.0


def test_nu_across_grids(pe):
    f = lambda tau: 0.75  # noqa: E731
    a = path_from_function([0.2], Grid.uniform(64, 1.0), 0.5, f)
    b = path_from_function([0.2], Grid.uniform(32, 1.0), 0.5, f)
    assert nu(pe, 0.5, a, 0.5, b) < 1e-20


def test_freeze_invariance(pe, paths, grid):
    x, y = paths[2], paths[3]
    r = freeze_invariance_check(pe, float(grid.nodes[16]), x, float(grid.nodes[8]), y,
                                float(grid.nodes[40]), float(grid.nodes[60]))
    assert r.check == "nu_freeze_invariance"
    assert r.passed
    with pytest.raises(DomainError):
        freeze_invariance_check(pe, 0.5, x, 0.5, y, 0.25, 0.75)


def test_mu_gradient_rejects_terminal_time(pe, paths):
    with pytest.raises(DomainError):
        mu_gradient(pe, 0.5, paths[1], 1.0, paths[0])


def test_fd_matches_terminal_gradient(rng):
    grid = Grid.uniform(1024, 1.0)
    x = random_path(rng, grid, 0.5, 2, 2, 1.0, blocks=4)
    s = np.array([0.6, -1.3])
    phi = lambda t, y: float(s @ freeze(y, t).node_values[-1])  # noqa: E731
    t = 0.25
    est = ci_derivative_fd(phi, t, x, 1.0 / 512)
    expected = s / (gamma_fn(0.5) * (1.0 - t) ** 0.5)
    err = np.linalg.norm(est.pair.grad_alpha - expected) / np.linalg.norm(expected)
    assert err <= 1e-3
    assert abs(est.pair.dt_alpha) < 1e-10
    assert est.probes == 5
    assert est.residual_ratio < 1e-8


@pytest.mark.parametrize("cells", [16, 2])
def test_fd_matches_mu_gradient(cells):
    grid = Grid.uniform(1024, 1.0)
    pe = NuParams(0.1, 0.5, 0.2)
    x = constant_path([0.0], grid, 0.5)
    anchor = constant_path([1.0], grid, 0.5)
    t = 0.25
    exact = mu_gradient(pe, 0.5, anchor, t, x).grad_alpha
    est = ci_derivative_fd(mu(pe, 0.5, anchor), t, x, cells / 1024, scale=0.1)
    assert np.linalg.norm(est.pair.grad_alpha - exact) / np.linalg.norm(exact) <= 1e-2
    assert abs(est.pair.dt_alpha) <= 1e-2 * np.linalg.norm(exact)


def test_fd_refuses_bad_designs(paths, grid):
    phi = lambda t, y: float(y.node_values[-1, 0])  # noqa: E731
    with pytest.raises(ConditioningError):
        ci_derivative_fd(phi, 0.25, paths[0], 0.125, [np.zeros(1)] * 3)
    with pytest.raises(DomainError):
        ci_derivative_fd(phi, 0.25, paths[0], 1.0 / 64)


def test_lemma_harness(paths, rng):
    pe = NuParams.with_default_beta(0.1, 0.5)
    reports = lemma_harness(pe, paths, 0.25, 3, rng)
    assert len(reports) == 27
    assert {r.check for r in reports} == {
        "nu_nonnegative", "nu_self_vanishing", "nu_symmetry", "nu_freeze_invariance",
        "lemma_lipschitz_via_nu", "lemma_integral_bound", "lemma_gradient_bound",
        "lemma_gradient_symmetric", "lemma_nu_convergence",
    }
    assert not [r for r in reports if r.failed]


def test_lemma_harness_needs_paths(pe, rng):
    with pytest.raises(DomainError):
        lemma_harness(pe, [], 0.25, 1, rng)


def test_test_functional(pe, paths, grid):
    x, anchor = paths[0], paths[1]
    psi = TestFunctional(pe, 0.5, anchor, Polynomial([1.0, 2.0, 3.0]), 2.0)
    t = float(grid.nodes[16])
    d = psi.derivatives(t, x)
    assert d.dt_alpha == pytest.approx(2.0 + 6.0 * t)
    assert_allclose(d.grad_alpha, 2.0 * mu_gradient(pe, 0.5, anchor, t, x).grad_alpha, rtol=1e-14)
    assert psi(t, x) == pytest.approx(1.0 + 2.0 * t + 3.0 * t * t + 2.0 * nu(pe, t, x, 0.5, anchor))
    neg = psi.negated()
    assert neg(t, x) == pytest.approx(-psi(t, x))
    assert_allclose(neg.derivatives(t, x).grad_alpha, -d.grad_alpha, rtol=1e-14)
    flat = TestFunctional(pe, 0.5, anchor, Polynomial([0.0, 1.0]), 0.0)
    assert flat.derivatives(t, x).grad_alpha.tolist() == [0.0]
    assert math.isclose(flat(t, x), t)


def test_fd_misfit_vanishes_faster_than_delta():
    grid = Grid.uniform(1024, 1.0)
    pe = NuParams(0.1, 0.5, 0.2)
    x = constant_path([0.0], grid, 0.5)
    phi = mu(pe, 0.5, constant_path([1.0], grid, 0.5))
    ratios = [ci_derivative_fd(phi, 0.25, x, 1.0 / d, scale=0.1).residual_ratio for d in (64, 128, 256, 512)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
