import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, special

from fracgame.calculus.fraccalc import (
    Grid, beta_fn, beta_identity_check, convolution_weights, double_singular_integral, gamma_fn,
    log_gamma, mittag_leffler, product_weights, singular_integral, trapezoid,
)
from fracgame.core.errors import AlignmentError, DivergenceError, DomainError


@pytest.mark.parametrize("x", [0.05, 0.3, 0.5, 0.75, 1.0, 1.5, 2.5, 7.25, 20.0])
def test_gamma_matches_scipy(x):
    assert gamma_fn(x) == pytest.approx(special.gamma(x), rel=1e-12)
    assert log_gamma(x) == pytest.approx(special.gammaln(x), rel=1e-12, abs=1e-13)


def test_gamma_known_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_gamma_rejects_non_positive(x):
    with pytest.raises(DomainError):
        gamma_fn(x)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.2, 0.3), (2.0, 0.75), (0.1, 3.0)])
def test_beta_matches_scipy(a, b):
    assert beta_fn(a, b) == pytest.approx(special.beta(a, b), rel=1e-12)


@pytest.mark.parametrize("z", [-1.0, -0.5, 0.0, 0.3, 1.0, 2.0])
def test_mittag_leffler_half(z):
    # E_{1/2}(z) = e^{z²} erfc(−z)
    exact = math.exp(z * z) * special.erfc(-z)
    assert mittag_leffler(0.5, z) == pytest.approx(exact, rel=1e-10)


def test_mittag_leffler_one_is_exp():
    for z in np.linspace(-3.0, 3.0, 13):
        assert mittag_leffler(1.0, float(z)) == pytest.approx(math.exp(z), rel=1e-13, abs=1e-15)


def test_mittag_leffler_domain():
    with pytest.raises(DomainError):
        mittag_leffler(1.5, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0)


def test_weight_row_sums_are_fractional_integrals_of_one():
    grid = Grid.uniform(50, 2.0)
    w = convolution_weights(grid, 0.4)
    exact = grid.nodes ** 0.4 / gamma_fn(1.4)
    assert_allclose(w.row_sums(), exact, rtol=0, atol=1e-13)
    # rows only see cells to the left of their node
    assert np.all(np.triu(w.weights[:-1], k=0) == 0.0)


def test_product_weights_exact_for_linear_data():
    p = 0.4
    nodes = np.concatenate([[0.0], np.sort(np.random.default_rng(3).uniform(0.0, 1.0, 9)), [1.0]])
    right = product_weights(nodes, p, 1.0, "right")
    assert right @ nodes == pytest.approx(beta_fn(2.0, 1.0 - p), rel=1e-12)
    left = product_weights(nodes, p, 0.0, "left")
    assert left @ (1.0 + nodes) == pytest.approx(1.0 / (1.0 - p) + 1.0 / (2.0 - p), rel=1e-12)


def test_product_weights_bad_side():
    with pytest.raises(DomainError):
        product_weights([0.0, 1.0], 0.5, 1.0, "middle")


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_singular_integral_matches_quad(p):
    grid = Grid.uniform(512, 1.0)
    g = np.cos(3.0 * grid.nodes)
    exact, _ = integrate.quad(lambda x: np.cos(3.0 * x), 0.0, 1.0, weight="alg", wvar=(0.0, -p))
    assert singular_integral(g, grid, p) == pytest.approx(exact, rel=1e-5)


def test_singular_integral_vector_data_and_start():
    grid = Grid.uniform(16, 1.0)
    g = np.stack([np.ones(17), 2.0 * np.ones(17)], axis=1)
    out = singular_integral(g, grid, 0.5, start=8)
    # ∫_{1/2}^1 (1−ξ)^{−1/2} dξ = 2 √(1/2)
    assert out == pytest.approx([2.0 * math.sqrt(0.5), 4.0 * math.sqrt(0.5)], rel=1e-12)
    assert singular_integral(np.ones(17), grid, 0.5, start=16) == 0.0


def test_singular_integral_rejects_divergent_kernel():
    grid = Grid.uniform(8, 1.0)
    with pytest.raises(DivergenceError):
        singular_integral(np.ones(9), grid, 1.0)
    with pytest.raises(AlignmentError):
        singular_integral(np.ones(5), grid, 0.5)


def test_double_singular_single_cell_is_beta():
    gam, p = 0.6, 0.3
    out = double_singular_integral(np.ones(2), [0.25, 1.0], gam, p)
    assert out == pytest.approx(beta_fn(gam, 1.0 - p) * 0.75 ** (gam - p), rel=1e-12)
    with pytest.raises(DivergenceError):
        double_singular_integral(np.ones(2), [0.0, 1.0], gam, 1.2)


@pytest.mark.parametrize("gam,t", [(0.3, 0.0), (0.7, 0.4), (1.0, 0.85)])
def test_beta_identity_check_passes(gam, t):
    r = beta_identity_check(gam, t, 0.5, 0.125, 4.0 / 3.0)
    assert r.check == "beta_identity"
    assert r.passed, r


def test_beta_identity_check_rejects_bad_exponent():
    with pytest.raises(DomainError):
        beta_identity_check(0.5, 0.0, 0.1, 0.0, 2.0)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid([0.1, 1.0])
    with pytest.raises(DomainError):
        Grid([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(DomainError):
        Grid.uniform(0, 1.0)
    grid = Grid.uniform(4, 1.0)
    assert grid.index_of(0.75) == 3
    assert grid.index_of(1.0) == 4
    with pytest.raises(AlignmentError):
        grid.index_of(0.3)
    with pytest.raises(AlignmentError):
        grid.merged(Grid.uniform(4, 2.0))
    assert grid.merged(Grid.uniform(2, 1.0)).same_as(grid)
    assert grid.merged(Grid.uniform(3, 1.0)).N == 6


def test_trapezoid():
    x = np.linspace(0.0, 1.0, 11)
    assert trapezoid(x, x) == pytest.approx(0.5, rel=1e-14)
