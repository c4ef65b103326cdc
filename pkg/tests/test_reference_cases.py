"""Small reference cases with known answers for each module."""

import numpy as np
import pytest

from conftest import dalembert_problem, random_spd, zeros
from gfwave import asymptotics as asy
from gfwave import linalg
from gfwave.errors import StructureError
from gfwave.genfunc import (
    Mollifier,
    NormRequest,
    SampledField,
    callable_net,
    compute_norm,
    constant_net,
    expr_net,
    mollify,
    parse_expression,
    partial,
)
from gfwave.genfunc.nets import DERIVED, CoefficientNet
from gfwave.solver import Grid, equivalence_check, make_grid, solve_system, wave_residual
from gfwave.transform import (
    HyperbolicSystem,
    WaveProblem,
    divergence_identity_residual,
    reconstruct_b,
    system_to_wave,
    wave_to_system,
)

BOX = [[0.0, 1.0], [-3.0, 3.0]]


# -- mollification -------------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["model", "log"])
@pytest.mark.parametrize("eps", [1.0, 0.1, 2.0**-12])
def test_constant_survives_mollification(mode, eps):
    raw = parse_expression("5", 1, BOX)
    vals = mollify(raw, Mollifier(mode), eps)(0.0, np.linspace(-3, 3, 13)[:, None])
    np.testing.assert_allclose(vals, 5.0, atol=1e-10)


@pytest.mark.parametrize("eps", [0.25, 2.0**-8])
def test_mollified_jump_outside_support(eps):
    f = mollify(parse_expression("H(x)", 1, BOX), Mollifier("model"), eps)
    r0 = Mollifier("model").radius
    np.testing.assert_allclose(f(0.0, [[-2 * eps * r0], [2 * eps * r0]]), [0.0, 1.0], atol=1e-10)


def test_difference_of_equal_nets_is_negligible():
    H = expr_net(parse_expression("H(x)", 1, BOX), Mollifier("model"))
    rep = asy.classify_net(H - H, asy.SweepConfig(K=[[[-1, 1]]]))
    assert rep.classification == asy.NEGLIGIBLE
    assert np.all(rep.values < 1e-12)


# -- norms ---------------------------------------------------------------------------------

def test_sup_of_constant():
    x = np.linspace(0, 1, 11)
    assert compute_norm(SampledField([x], np.full(11, 2.0)), NormRequest("sup", K=[[0, 1]])) == 2.0


@pytest.mark.parametrize("N", [51, 101, 201])
def test_h0_norm_of_sine_within_h_squared(N):
    x = np.linspace(0, 1, N)
    h = x[1] - x[0]
    val = compute_norm(SampledField([x], np.sin(np.pi * x)), NormRequest("H", k=0))
    assert abs(val - np.sqrt(0.5)) <= 2 * h * h


# -- linear algebra ------------------------------------------------------------------------

def test_eigen_examples():
    np.testing.assert_allclose(linalg.sym_eig(np.eye(3)).values, [1, 1, 1])
    dec = linalg.sym_eig(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(dec.values, [4, 9])
    np.testing.assert_allclose(np.abs(dec.U), np.eye(2))


def test_eigen_reconstruction_random_5x5(rng):
    for _ in range(100):
        A = rng.normal(size=(5, 5))
        A = A + A.T
        dec = linalg.sym_eig(A)
        U = dec.U
        assert np.linalg.norm(U.T @ np.diag(dec.values) @ U - A) <= 1e-10 * np.linalg.norm(A)


def test_sqrt_examples(rng):
    np.testing.assert_allclose(linalg.spd_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(linalg.spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)
    for _ in range(100):
        R = random_spd(rng, 4, 1e6)
        S = linalg.spd_sqrt(R)
        assert np.linalg.norm(S @ S - R) <= 1e-10 * np.linalg.norm(R)
        assert np.linalg.eigvalsh(S).min() > 0


def test_lorentzian_with_bounded_shift(rng):
    for _ in range(100):
        g = rng.normal(size=3)
        g *= rng.uniform(0, 10) / np.linalg.norm(g)
        rep = linalg.lorentzian_check(linalg.assemble_metric(g, random_spd(rng, 3, 1e6)))
        assert rep.verdict == "Lorentzian" and rep.index == 1


def test_divergence_examples():
    const = lambda t, x: np.broadcast_to(np.array([[1.0, 2.0], [2.0, 5.0]]), (np.atleast_2d(x).shape[0], 2, 2))
    np.testing.assert_array_equal(linalg.matrix_divergence(const, 0.0, np.array([0.3, 0.1]), 1e-3).ravel(), [0, 0])
    lin = lambda t, x: np.atleast_2d(x)[:, :, None]
    assert linalg.matrix_divergence(lin, 0.0, np.array([0.7]), 1e-3).ravel()[0] == pytest.approx(1.0, abs=1e-10)


def test_divergence_order_for_cubic_field():
    def S(t, x):
        x = np.atleast_2d(x)
        a, b = x[:, 0], x[:, 1]
        return np.stack([np.stack([a**3, a * b**2], -1), np.stack([a * b**2, b**3 + a**2 * b], -1)], -2)

    x0 = np.array([0.4, -0.3])
    a, b = x0
    # (Div S)_j = sum_i d_i S_ij
    exact = np.array([3 * a**2 + 2 * a * b, b**2 + 3 * b**2 + a**2])
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = [np.linalg.norm(linalg.matrix_divergence(S, 0.0, x0, h).ravel() - exact) for h in hs]
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order == pytest.approx(2.0, abs=0.1)


# -- transform -----------------------------------------------------------------------------

def test_identity_sqrt_keeps_b():
    S = constant_net(np.eye(2), 2)
    bt = callable_net(lambda t, x: np.stack([x[:, 0], x[:, 1] ** 2], -1), 2, (2,))
    x = np.array([[0.3, -0.6]])
    np.testing.assert_allclose(reconstruct_b(bt, S)(0.1, 0.0, x), bt(0.1, 0.0, x), atol=1e-12)


def test_reconstruct_b_scalar_case():
    # S = 1 + x^2/4, b_tilde = 0  =>  b = S S'; zero at x = 0, S S' = (1 + x^2/4) x / 2 elsewhere
    from gfwave.genfunc import as_spd
    S = as_spd(callable_net(lambda t, x: (1 + x[:, 0] ** 2 / 4)[:, None, None], 1, (1, 1)))
    b = reconstruct_b(constant_net(np.zeros(1), 1), S)
    assert abs(b(0.1, 0.0, [[0.0]])[0, 0]) < 1e-8
    assert b(0.1, 0.0, [[0.5]])[0, 0] == pytest.approx((1 + 0.0625) * 0.25, rel=1e-6)


def test_system_reads_back_as_unit_wave():
    q = system_to_wave(wave_to_system(dalembert_problem()))
    x = np.array([[0.1], [0.7]])
    np.testing.assert_allclose(q.R(0.1, 0.0, x)[:, 0, 0], 1.0)
    for name in ("g", "a", "b", "c"):
        np.testing.assert_allclose(getattr(q, name)(0.1, 0.0, x), 0.0, atol=1e-12)


def test_first_equation_must_be_time_derivative():
    s = wave_to_system(dalembert_problem())
    B = constant_net(np.zeros((3, 3)), 1)
    with pytest.raises(StructureError):
        system_to_wave(HyperbolicSystem(1, s.A, B, s.F, s.w0, s.box, s.T))


def test_divergence_identity_exact_cases():
    S = constant_net(np.array([[2.0, 0.3], [0.3, 1.0]]), 2)
    quad = callable_net(lambda t, x: x[:, 0] ** 2 + 3 * x[:, 0] * x[:, 1] - x[:, 1] ** 2, 2)
    assert divergence_identity_residual(S, quad, [0.2, -0.4], 0.1) <= 1e-10
    assert divergence_identity_residual(S, constant_net(4.0, 2), [0.2, -0.4], 0.1) == 0.0


# -- solvers -------------------------------------------------------------------------------

def test_damped_ode_reduction_at_fine_grid():
    p = WaveProblem(1, constant_net([[1.0]], 1), zeros(1, (1,)), constant_net(-1.0, 1), zeros(1, (1,)),
                    zeros(1), zeros(1), zeros(1), constant_net(1.0, 1), [[0.0, 1.0]], 1.0)
    sol = solve_system(p, make_grid(p, 1 / 200, 0.1), 0.1)
    assert np.max(np.abs(sol.u_final - (1 - np.exp(-1.0)))) <= 1e-4


def test_zero_system_stays_zero():
    s = wave_to_system(dalembert_problem())
    z = HyperbolicSystem(1, s.A, s.B, constant_net(np.zeros(3), 1), constant_net(np.zeros(3), 1), s.box, s.T)
    sol = solve_system(z, make_grid(z, 1 / 50, 0.1), 0.1)
    assert np.max(np.abs(sol.final)) <= 1e-13


def test_manufactured_steady_state_residual():
    # u = 1 + 2x is harmonic; with c = 2 and f = c u it is a steady solution
    u0 = callable_net(lambda t, x: 1 + 2 * x[:, 0], 1, t_independent=True)
    p = WaveProblem(1, constant_net([[1.0]], 1), zeros(1, (1,)), zeros(1), zeros(1, (1,)), constant_net(2.0, 1),
                    callable_net(lambda t, x: 2 * (1 + 2 * x[:, 0]), 1, t_independent=True), u0, zeros(1),
                    [[0.0, 1.0]], 1.0)
    grid = Grid(p.box, 0.05, 0.01, 10, "extend")
    u = u0.sample_grid(0.1, 0.0, grid.axes)
    assert wave_residual(p, grid, 0.1, u, u, u, 0.0) <= 1e-10


def test_smooth_problem_is_eps_stable():
    p = dalembert_problem()
    a = equivalence_check(p, 1 / 25, 1.0, refinements=(1, 2))
    b = equivalence_check(p, 1 / 25, 2.0**-10, refinements=(1, 2))
    for ra, rb in zip(a["levels"], b["levels"]):
        assert abs(ra["gap_l2"] - rb["gap_l2"]) <= 1e-8


# -- sweeps and hypotheses -----------------------------------------------------------------

def test_planted_inverse_square():
    eps = asy.default_eps()
    assert asy.classify_values(eps, eps**-2).fit.p == pytest.approx(2.0, abs=0.01)


def test_constant_net_is_bounded():
    rep = asy.classify_net(constant_net(3.0, 1), asy.SweepConfig(K=[[[-1, 1]]]))
    assert rep.classification == asy.BOUNDED
    assert rep.fit.p == pytest.approx(0.0, abs=0.02)


def test_cubic_eps_net_is_negligible():
    net = CoefficientNet(1, (), lambda eps, t, x: np.full(x.shape[0], eps**3), DERIVED)
    rep = asy.classify_net(net, asy.SweepConfig(K=[[[-1, 1]]]))
    assert rep.classification == asy.NEGLIGIBLE and rep.order == pytest.approx(3.0, abs=1e-9)


def _constant_problem():
    return WaveProblem(1, constant_net([[2.0]], 1), constant_net([0.5], 1), constant_net(-1.0, 1),
                       constant_net([0.3], 1), constant_net(1.0, 1), zeros(1),
                       callable_net(lambda t, x: np.exp(-((x[:, 0]) / 0.3) ** 2), 1, t_independent=True),
                       zeros(1), [[-3.0, 3.0]], 1.0)


@pytest.mark.parametrize("case", ["A", "B", "C"])
def test_constant_coefficients_pass_every_case(case):
    assert asy.verify_wave_conditions(_constant_problem(), case, asy.SweepConfig(R_ext=2.0)).passed


def test_smooth_solution_net_is_bounded():
    cfg = asy.SweepConfig(eps=2.0 ** -np.arange(4, 10))
    rep = asy.solution_moderateness(_constant_problem(), 0.05, cfg, perturb=False, refine=False)
    assert rep.classification == asy.BOUNDED
    np.testing.assert_allclose(rep.values, rep.values[0], rtol=1e-12)


def test_constant_metric_pipeline():
    box = [[0, 1], [-2, 2]]
    R = [parse_expression("3", 1, box)]
    p, rep = asy.geroch_traschen_pipeline(R, [], 1, [[-3, 3]], 1.0, asy.SweepConfig(R_ext=2.0))
    assert rep.passed
    S = wave_to_system(p).notes["S"]
    np.testing.assert_allclose(S(0.01, 0.0, [[-2.5], [0.0], [2.5]])[:, 0, 0], np.sqrt(3.0))


def test_partial_of_mollified_jump_matches_kernel():
    # d/dx (H * psi)(x) = psi(x)
    m = Mollifier("model")
    d = partial(expr_net(parse_expression("H(x)", 1, BOX), m), 1)
    x = np.array([[0.0], [0.03]])
    np.testing.assert_allclose(d(0.1, 0.0, x), m.kernel(0.1, x), rtol=1e-6)
