import numpy as np
import pytest
from numpy.polynomial import Polynomial

from fracgame.calculus.fraccalc import Grid
from fracgame.calculus.paths import extend, freeze, path_library, random_path
from fracgame.calculus.testfunc import NuParams, TestFunctional
from fracgame.core.errors import AlignmentError, ConfigError, DomainError
from fracgame.core.reports import GRADE_INFO
from fracgame.game.viscosity import (
    CandidateFunctional, boundary_residual, doubling_diagnostic, lipschitz_L_check, vminus_check,
    vplus_check,
)

TIMES = [0.0, 0.25, 0.5, 0.75, 1.0]


@pytest.fixture
def pe():
    return NuParams.with_default_beta(0.1, 0.5)


def test_candidate_caches_on_the_frozen_path(paths, grid, rng):
    calls = []

    def fn(t, x):
        calls.append(t)
        return float(x.node_values[-1, 0])

    phi = CandidateFunctional.closed_form("terminal", fn)
    t = float(grid.nodes[16])
    first = phi(t, paths[0])
    again = phi(t, extend(paths[0], t, rng.uniform(-1.0, 1.0, (grid.N - 16, 1))))
    assert first == again
    assert len(calls) == 1
    assert phi.evaluations == 1
    assert first == pytest.approx(freeze(paths[0], t).node_values[-1, 0])


def test_scaled_candidate(paths, idle):
    phi = CandidateFunctional.frozen_sigma(idle)
    psi = phi.scaled(2.0, 0.5)
    assert psi(0.5, paths[0]) == pytest.approx(2.0 * phi(0.5, paths[0]) + 0.5)


def test_boundary_residual(idle, pursuit, paths):
    assert boundary_residual(CandidateFunctional.frozen_sigma(idle), idle.sigma, paths) == 0.0
    upper = CandidateFunctional.value_tree(pursuit, 4)
    assert boundary_residual(upper, pursuit.sigma, paths) == 0.0
    assert boundary_residual(upper, pursuit.sigma, []) == 0.0


def test_sign_checks_on_a_time_ramp(pursuit, paths, pe):
    # φ ≡ 0, ψ = −t: ∂ψ + H(·, 0) = −1 everywhere
    phi = CandidateFunctional.closed_form("zero", lambda t, x: 0.0)
    psi = TestFunctional(pe, 0.5, paths[1], Polynomial([0.0, -1.0]), 0.0)
    points = [(t, x) for t in TIMES[:-1] for x in paths]
    plus = vplus_check(phi, psi, pursuit, points)
    assert plus.check == "viscosity_vplus"
    assert plus.passed and plus.inputs["t"] == 0.0
    minus = vminus_check(phi, psi, pursuit, points)
    assert minus.inputs["t"] == 0.75
    assert not minus.passed and minus.failed
    quiet = vminus_check(phi, psi, pursuit, points, grade=GRADE_INFO)
    assert not quiet.passed and not quiet.failed


def test_wrong_candidate_fails_the_sign_check(pursuit, paths, pe):
    # pursuit has H(·, 0) = 0, so φ ≡ 0 solves the equation and φ = 5t does not
    psi = TestFunctional(pe, 0.5, paths[1], Polynomial([0.0, 4.0]), 0.0)
    points = [(t, x) for t in TIMES for x in paths]
    wrong = CandidateFunctional.closed_form("ramp5", lambda t, x: 5.0 * t)
    r = vplus_check(wrong, psi, pursuit, points)
    assert r.inputs["t"] == 0.0
    assert r.extra["dt_alpha"] == pytest.approx(4.0)
    assert r.failed
    right = CandidateFunctional.closed_form("zero", lambda t, x: 0.0)
    assert not vplus_check(right, psi, pursuit, points).failed
    assert vminus_check(right, psi, pursuit, points).passed


def test_sign_check_at_the_horizon_is_inconclusive(pursuit, paths, pe):
    phi = CandidateFunctional.closed_form("zero", lambda t, x: 0.0)
    psi = TestFunctional(pe, 0.5, paths[1], Polynomial([0.0, -1.0]), 0.0)
    r = vminus_check(phi, psi, pursuit, [(t, paths[0]) for t in TIMES])
    assert r.grade == GRADE_INFO
    assert "inconclusive" in r.note
    with pytest.raises(DomainError):
        vplus_check(phi, psi, pursuit, [])


def test_lipschitz_of_the_frozen_terminal_value(idle, paths):
    phi = CandidateFunctional.frozen_sigma(idle)
    pairs = [(t, x, y) for t in TIMES[:-1] for a, x in enumerate(paths) for y in paths[a + 1:]]
    r = lipschitz_L_check(phi, 0.5, pairs, bound=1.0)
    assert r.check == "lipschitz_L"
    assert r.passed
    assert 0.0 < r.extra["lambda"] <= 1.0


def test_lipschitz_flags_a_jump(paths):
    phi = CandidateFunctional.closed_form("jump", lambda t, x: 1e9 * float(x.node_values[-1, 0]))
    r = lipschitz_L_check(phi, 0.5, [(0.5, paths[0], paths[1])])
    assert r.failed


def test_doubling_identical_candidates(pursuit, paths, pe):
    lib = path_library(paths[:2], TIMES)
    phi = CandidateFunctional.value_tree(pursuit, 2)
    report = doubling_diagnostic(phi, phi, pursuit, pe, [0.1, 0.01], lib, TIMES)
    assert report.status == "no_contradiction_hypothesis"
    checks = report.checks()
    assert [c.check for c in checks] == ["doubling_kappa"]
    assert checks[0].passed


def test_doubling_shifted_candidates(idle, paths, pe):
    lib = path_library(paths, TIMES)
    phi = CandidateFunctional.frozen_sigma(idle)
    report = doubling_diagnostic(phi.scaled(1.0, 0.01), phi, idle, pe, [0.1, 0.01, 0.001], lib, TIMES)
    assert report.status == "ok"
    assert report.kappa == pytest.approx(0.01)
    assert len(report.records) == 3
    checks = report.checks()
    assert {"doubling_gap_bound", "doubling_nu_bound"} <= {c.check for c in checks}
    assert not [c for c in checks if c.failed]
    d = report.to_dict()
    assert d["times"] == TIMES
    assert len(report.trace) == 3 * len(TIMES) * len(lib)


def test_doubling_refuses_bad_libraries(idle, paths, pe, rng):
    phi = CandidateFunctional.frozen_sigma(idle)
    with pytest.raises(ConfigError):
        doubling_diagnostic(phi, phi, idle, pe, [0.1], [], TIMES)
    other = random_path(rng, Grid.uniform(32, 1.0), 0.5, 1, 2, 2.0)
    with pytest.raises(AlignmentError):
        doubling_diagnostic(phi, phi, idle, pe, [0.1], [paths[0], other], TIMES)
