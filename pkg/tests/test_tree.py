import numpy as np
import pytest

from fracgame.calculus.fraccalc import Grid
from fracgame.calculus.paths import constant_path, extend, freeze, sup_distance
from fracgame.core.errors import AlignmentError, BudgetError, DivergenceError, DomainError
from fracgame.game import tree
from fracgame.game.dynamics import build_dynamics, hamiltonian


def test_decision_split():
    assert tree.decision_split(0, 10, 3) == (0, 4, 7, 10)
    assert tree.decision_split(4, 10, 2) == (4, 7, 10)
    assert tree.decision_split(10, 10, 0) == (10,)
    with pytest.raises(AlignmentError):
        tree.decision_split(8, 10, 3)
    with pytest.raises(AlignmentError):
        tree.decision_split(0, 10, 0)


def test_schedule_validation(grid):
    s = tree.constant_schedule(grid, 0.5, 4, 1, 0)
    assert s.K == 4
    assert s.cell_of(32) == 0
    assert s.cell_of(63) == 3
    with pytest.raises(DomainError):
        tree.ControlSchedule((0, 4), (0, 0), (0,))


def test_zero_dynamics_simulate_is_freeze(idle, paths, grid):
    base = paths[0]
    t = float(grid.nodes[20])
    traj = tree.simulate(idle, base, t, tree.constant_schedule(grid, t, 3, 1, 1))
    assert sup_distance(traj, freeze(base, t)) < 1e-15


def test_zero_dynamics_value_is_frozen_sigma(idle, paths, grid):
    base = paths[1]
    t = float(grid.nodes[40])
    vt = tree.value(idle, base, t, 3)
    assert vt.upper_value == pytest.approx(idle.sigma(freeze(base, t)), abs=1e-12)
    assert vt.lower_value == pytest.approx(vt.upper_value, abs=1e-12)
    assert vt.leaves == 4 ** 3


def test_history_is_kept(pursuit, paths, grid):
    base = paths[2]
    t = float(grid.nodes[16])
    traj = tree.simulate(pursuit, base, t, tree.constant_schedule(grid, t, 2, 0, 1))
    assert np.max(np.abs(traj.node_values[:17] - base.node_values[:17])) < 1e-12
    # f = u − v = −2 after t
    assert np.all(traj.caputo[16:] == -2.0)


def test_simulate_rejects_misaligned_schedule(pursuit, paths, grid):
    with pytest.raises(AlignmentError):
        tree.simulate(pursuit, paths[0], 0.5, tree.constant_schedule(grid, 0.25, 2))
    with pytest.raises(AlignmentError):
        tree.simulate(pursuit, paths[0], 0.0, tree.constant_schedule(grid, 0.0, 2), Grid.uniform(32, 1.0))


def test_upper_dominates_lower(pursuit, paths, grid):
    for base in paths[:2]:
        vt = tree.value(pursuit, base, float(grid.nodes[32]), 3)
        assert vt.upper_value >= vt.lower_value - 1e-12
        assert vt.bracket >= -1e-12


def test_affine_payoff_has_no_gap(paths, grid):
    dyn = build_dynamics("linear_scalar", {"a": -0.5, "b": 1.0, "c": 0.5, "d": 0.1},
                         [[-1.0], [1.0]], [[-1.0], [0.0], [1.0]], 1.5)
    vt = tree.value(dyn, paths[0], 0.5, 3)
    assert abs(vt.upper_value - vt.lower_value) <= 1e-9


def test_budget_is_enforced(pursuit, paths):
    with pytest.raises(BudgetError) as exc:
        tree.value(pursuit, paths[0], 0.0, 12, budget=1000)
    assert exc.value.required == 4 ** 12


def test_value_rejects_bad_mode(pursuit, paths):
    with pytest.raises(DomainError):
        tree.value(pursuit, paths[0], 0.0, 1, "middle")


def test_dpp_recomposition(pursuit, paths, grid):
    assert tree.dpp_residual(pursuit, paths[0], float(grid.nodes[32]), 3) <= 1e-12
    assert tree.dpp_residual(pursuit, paths[0], 1.0, 0) <= 1e-12


def test_value_ignores_the_future(pursuit, paths, grid, rng):
    base = paths[3]
    t = float(grid.nodes[24])
    a = tree.value(pursuit, base, t, 2, witnesses=False)
    b = tree.value(pursuit, extend(base, t, rng.uniform(-2.0, 2.0, (grid.N - 24, 1))), t, 2, witnesses=False)
    assert abs(a.upper_value - b.upper_value) <= 1e-12
    assert abs(a.lower_value - b.lower_value) <= 1e-12


def test_terminal_boundary(pursuit, paths):
    vt = tree.value(pursuit, paths[0], 1.0, 4)
    assert vt.decision_nodes == (64,)
    assert vt.upper_value == pursuit.sigma(paths[0])


def test_overflow_guard(grid):
    dyn = build_dynamics("linear_scalar", {"a": 200.0}, [[0.0]], [[0.0]], 200.0)
    with pytest.raises(DivergenceError):
        tree.simulate(dyn, constant_path([1.0], grid, 0.5), 0.0, tree.constant_schedule(grid, 0.0, 1))


def test_witness_replays_the_value(pursuit, paths, grid):
    t = float(grid.nodes[32])
    vt = tree.value(pursuit, paths[1], t, 3)
    assert tree.cost(pursuit, vt.upper_path, t, vt.upper_schedule) == pytest.approx(vt.upper_value, abs=1e-10)
    assert tree.cost(pursuit, vt.lower_path, t, vt.lower_schedule) == pytest.approx(vt.lower_value, abs=1e-10)
    d = vt.to_dict(pursuit)
    assert d["decision_grid"][0] == t
    assert len(d["upper_controls"]["u"]) == 3
    assert len(vt.csv_rows()) == 2 * (grid.N - 32 + 1)


def test_minimax_trivial_dynamics(idle, paths, grid):
    phi = lambda tau, y: idle.sigma(freeze(y, tau))  # noqa: E731
    t = float(grid.nodes[48])
    for sign in ("plus", "minus"):
        w = tree.minimax_witness(phi, t, paths[0], [1.0], sign, idle)
        assert w.residual == 0.0


def test_minimax_sign_flip_is_exact(pursuit, paths, grid):
    phi = lambda tau, y: float(freeze(y, tau).node_values[-1, 0] ** 2)  # noqa: E731
    t = float(grid.nodes[56])
    s = np.array([0.7])
    plus = tree.minimax_witness(phi, t, paths[2], s, "plus", pursuit)
    flipped = tree.minimax_witness(lambda tau, y: -phi(tau, y), t, paths[2], -s, "minus", pursuit,
                                   lambda tau, y, sv: -hamiltonian(pursuit, tau, y, -sv).value)
    assert flipped.residual == pytest.approx(plus.residual, abs=1e-12)
    with pytest.raises(DomainError):
        tree.minimax_witness(phi, t, paths[2], s, "both", pursuit)
