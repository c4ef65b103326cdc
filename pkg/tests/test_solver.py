import numpy as np
import pytest

from conftest import dalembert_exact, dalembert_problem, zeros
from gfwave.errors import BlowUpError, CFLViolation, ConfigurationError
from gfwave.genfunc import callable_net, constant_net
from gfwave.solver import (
    Grid,
    equivalence_check,
    fitted_order,
    make_grid,
    solve_system,
    solve_wave,
    w_relation_residual,
    wave_to_system,
)
from gfwave.transform import WaveProblem


def _damped():
    # u_tt = -u_t, u(0) = 0, u_t(0) = 1  =>  u = 1 - exp(-t)
    return WaveProblem(1, constant_net([[1.0]], 1), zeros(1, (1,)), constant_net(-1.0, 1), zeros(1, (1,)),
                       zeros(1), zeros(1), zeros(1), constant_net(1.0, 1), [[0.0, 1.0]], 1.0)


def test_grid_layout():
    g = Grid([[0.0, 1.0]], 0.25, 0.1, 10, "periodic")
    np.testing.assert_allclose(g.axes[0], [0, 0.25, 0.5, 0.75])
    g = Grid([[0.0, 1.0]], 0.25, 0.1, 10, "extend")
    assert g.shape == (5,)
    assert g.T == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        Grid([[0.0, 1.0]], 0.3, 0.1, 10)


def test_make_grid_respects_cfl():
    p = dalembert_problem()
    g = make_grid(p, 1 / 50, 0.1, cfl=0.45)
    assert g.courant() <= 0.45 * (1 + 1e-9)
    assert g.T == pytest.approx(1.0)
    # unit speed: lambda_max is 1 times the safety factor
    assert g.lam_max == pytest.approx(1.2)


@pytest.mark.parametrize("solver", [solve_system, solve_wave])
def test_dalembert_against_closed_form(solver):
    p = dalembert_problem()
    g = make_grid(p, 1 / 100, 0.1)
    sol = solver(p, g, 0.1)
    exact = dalembert_exact(g.T, g.axes[0][:, None])
    assert np.max(np.abs(sol.u_final - exact)) < 1e-3


@pytest.mark.parametrize("solver", [solve_system, solve_wave])
def test_damped_against_closed_form(solver):
    p = _damped()
    g = make_grid(p, 1 / 100, 0.1)
    sol = solver(p, g, 0.1)
    assert np.max(np.abs(sol.u_final - (1 - np.exp(-1.0)))) < 1e-5


def test_convergence_orders():
    out = equivalence_check(dalembert_problem(), 1 / 25, 0.1, refinements=(1, 2, 4), exact=dalembert_exact)
    assert out["orders"]["gap_l2"] >= 1.9
    assert out["orders"]["z_relation_l2"] >= 1.9
    assert out["orders"]["system_error_l2"] >= 1.9
    assert out["orders"]["wave_error_l2"] >= 1.9


def test_w_relation_holds_on_solution():
    p = dalembert_problem()
    s = wave_to_system(p)
    g = make_grid(s, 1 / 100, 0.1)
    z_err, v_err = w_relation_residual(s, solve_system(s, g, 0.1, save_every=1))
    assert z_err < 1e-3 and v_err < 1e-2


def test_two_dimensional_plane_wave():
    # u = sin(2 pi (x + y) - 2 pi sqrt(2) t) solves u_tt = u_xx + u_yy
    k = 2 * np.pi
    u0 = callable_net(lambda t, x: np.sin(k * (x[:, 0] + x[:, 1])), 2, t_independent=True)
    u1 = callable_net(lambda t, x: -k * np.sqrt(2) * np.cos(k * (x[:, 0] + x[:, 1])), 2, t_independent=True)
    p = WaveProblem(2, constant_net(np.eye(2), 2), zeros(2, (2,)), zeros(2), zeros(2, (2,)), zeros(2), zeros(2),
                    u0, u1, [[0, 1], [0, 1]], 0.25)
    g = make_grid(p, 1 / 40, 0.1)
    X, Y = np.meshgrid(*g.axes, indexing="ij")
    exact = np.sin(k * (X + Y) - k * np.sqrt(2) * g.T)
    for solver in (solve_system, solve_wave):
        assert np.max(np.abs(solver(p, g, 0.1).u_final - exact)) < 2e-2


@pytest.mark.parametrize("solver", [solve_system, solve_wave])
def test_zero_data_gives_zero(solver):
    p = WaveProblem(1, constant_net([[1.0]], 1), zeros(1, (1,)), zeros(1), zeros(1, (1,)), zeros(1), zeros(1),
                    zeros(1), zeros(1), [[0.0, 1.0]], 1.0)
    sol = solver(p, make_grid(p, 1 / 50, 0.1), 0.1)
    assert np.max(np.abs(sol.u_final)) <= 1e-13


@pytest.mark.parametrize("solver", [solve_system, solve_wave])
def test_cfl_violation_is_reported(solver):
    p = dalembert_problem()
    g = make_grid(p, 1 / 200, 0.1)
    bad = Grid(g.box, g.h, 3 * g.tau, int(round(g.steps / 3)), g.boundary, g.lam_max)
    with pytest.raises(CFLViolation):
        solver(p, bad, 0.1)
    with pytest.raises(BlowUpError):
        solver(p, bad, 0.1, check_cfl=False)


def test_fitted_order_of_exact_power():
    hs = np.array([0.1, 0.05, 0.025])
    assert fitted_order(hs, 3.0 * hs**2) == pytest.approx(2.0)
