import numpy as np
import pytest
import sympy as sp

from conftest import dalembert_problem, zeros
from gfwave.errors import NotSPDError, ShapeError, StructureError
from gfwave.genfunc import as_spd, callable_net, constant_net
from gfwave.transform import (
    HyperbolicSystem,
    WaveProblem,
    b_tilde_net,
    divergence_identity_residual,
    reconstruct_b,
    system_to_wave,
    wave_to_system,
)
from problems import polynomial_problems, round_trip_errors


def test_unit_speed_system_matrices():
    s = wave_to_system(dalembert_problem())
    x = np.array([[0.3]])
    A = s.A[0](0.1, 0.0, x)[0]
    B = s.B(0.1, 0.0, x)[0]
    np.testing.assert_array_equal(A, [[0, 0, 0], [0, 0, 1], [0, 1, 0]])
    np.testing.assert_array_equal(B, [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    np.testing.assert_allclose(s.w0(0.1, 0.0, x)[0], [np.sin(0.6 * np.pi), 0.0, 2 * np.pi * np.cos(0.6 * np.pi)],
                               rtol=1e-7)


def test_time_dependent_speed_lower_block():
    # S = 1 + t, so (dS/dt) S^-1 = 1 / (1 + t)
    R = as_spd(callable_net(lambda t, x: ((1 + t) ** 2)[:, None, None] + 0 * x[:, :, None], 1, (1, 1)))
    p = WaveProblem(1, R, zeros(1, (1,)), zeros(1), zeros(1, (1,)), zeros(1), zeros(1), zeros(1), zeros(1),
                    [[0, 1]], 2.0)
    B = wave_to_system(p).B(0.1, 1.0, [[0.3]])[0]
    assert B[2, 2] == pytest.approx(0.5, rel=1e-7)


def _manufactured():
    t, x, y = sp.symbols("t x y")
    S = sp.Matrix([[2 + x**2 / 4 + t / 2, sp.Rational(3, 10) * x * y],
                   [sp.Rational(3, 10) * x * y, sp.Rational(3, 2) + y**2 / 4]])
    R = S * S
    g = sp.Matrix([x / 5, -sp.Rational(1, 10) + t * y])
    a, c = t, 1 + x
    b = sp.Matrix([x - y, x * y])
    u = sp.sin(x + 2 * y - t) * sp.exp(t * 3 / 10)
    X = [x, y]
    f = (-sp.diff(u, t, 2) + sum(2 * g[i] * sp.diff(u, X[i], t) for i in range(2))
         + sum(R[i, j] * sp.diff(u, X[i], X[j]) for i in range(2) for j in range(2))
         + a * sp.diff(u, t) + sum(b[i] * sp.diff(u, X[i]) for i in range(2)) + c * u)
    grad = sp.Matrix([sp.diff(u, v) for v in X])
    w = sp.Matrix([u, sp.diff(u, t)]).col_join(S * grad)
    return (t, x, y), dict(S=S, R=R, g=g, a=a, b=b, c=c, f=f, u=u, w=w)


def _as_net(expr, syms, shape):
    entries = list(expr) if shape else [expr]
    fns = [sp.lambdify(syms, e, "numpy") for e in entries]

    def func(t, x):
        P = x.shape[0]
        t = np.broadcast_to(t, (P,))
        cols = [np.broadcast_to(np.asarray(fn(t, x[:, 0], x[:, 1]), dtype=float), (P,)) for fn in fns]
        return np.stack(cols, axis=-1).reshape((P,) + shape)

    return callable_net(func, 2, shape)


def test_manufactured_solution_satisfies_system():
    """w = (u, u_t, S grad u) of an exact wave solution solves -w_t + A_i w_i + B w = F."""
    syms, m = _manufactured()
    t, x, y = syms
    p = WaveProblem(2, as_spd(_as_net(m["R"], syms, (2, 2))), _as_net(m["g"], syms, (2,)), _as_net(m["a"], syms, ()),
                    _as_net(m["b"], syms, (2,)), _as_net(m["c"], syms, ()), _as_net(m["f"], syms, ()),
                    _as_net(m["u"].subs(t, 0), syms, ()), _as_net(sp.diff(m["u"], t).subs(t, 0), syms, ()),
                    [[-1, 1], [-1, 1]], 1.0)
    s = wave_to_system(p)
    w = m["w"]
    residual = -sp.diff(w, t)
    dw = [sp.diff(w, x), sp.diff(w, y)]
    pts = [(0.0, 0.1, -0.2), (0.4, -0.3, 0.5), (0.9, 0.6, 0.2)]
    for t0, x0, y0 in pts:
        sub = {t: t0, x: x0, y: y0}
        xv = np.array([[x0, y0]])
        lhs = np.array(residual.subs(sub), dtype=float).ravel()
        for i in range(2):
            lhs += s.A[i](0.1, t0, xv)[0] @ np.array(dw[i].subs(sub), dtype=float).ravel()
        lhs += s.B(0.1, t0, xv)[0] @ np.array(w.subs(sub), dtype=float).ravel()
        np.testing.assert_allclose(lhs, s.F(0.1, t0, xv)[0], atol=1e-6)
        np.testing.assert_allclose(s.notes["S"](0.1, t0, xv)[0], np.array(m["S"].subs(sub), dtype=float), atol=1e-12)


@pytest.mark.parametrize("k", range(5))
def test_polynomial_round_trip(k):
    p = polynomial_problems()[k]
    s = wave_to_system(p)
    back = system_to_wave(s)
    errs = round_trip_errors(p, back)
    assert max(errs.values()) <= 1e-8, errs
    x = np.zeros((1, p.n))
    for Ai in s.A:
        M = Ai(0.1, 0.5, x)[0]
        assert np.array_equal(M, M.T)


def test_b_reconstruction_is_inverse():
    p = polynomial_problems()[2]
    S = wave_to_system(p).notes["S"]
    bt = b_tilde_net(p.b, S, p.R)
    b = reconstruct_b(bt, S)
    x = np.array([[0.2, -0.4], [0.5, 0.1]])
    np.testing.assert_allclose(b(0.1, 0.3, x), p.b(0.1, 0.3, x), atol=1e-8)


def test_system_to_wave_rejects_unstructured_system():
    s = wave_to_system(dalembert_problem())
    bad = constant_net(np.array([[0, 0, 1.0], [0, 0, 1], [1, 1, 0]]), 1)
    with pytest.raises(StructureError):
        system_to_wave(HyperbolicSystem(1, [bad], s.B, s.F, s.w0, s.box, s.T))


def test_shape_validation():
    p = dalembert_problem()
    with pytest.raises(ShapeError):
        WaveProblem(1, p.R, zeros(1, (2,)), p.a, p.b, p.c, p.f, p.u0, p.u1, p.box, p.T)


def test_validate_detects_non_spd():
    R = as_spd(callable_net(lambda t, x: x[:, :, None] + 0 * t[:, None, None], 1, (1, 1)))
    p = WaveProblem(1, R, zeros(1, (1,)), zeros(1), zeros(1, (1,)), zeros(1), zeros(1), zeros(1), zeros(1),
                    [[-1, 1]], 1.0)
    with pytest.raises(NotSPDError):
        p.validate(0.1, 0.0, np.array([[0.5], [-0.5]]))


def _div_identity_setup():
    S = callable_net(lambda t, x: np.stack([np.stack([2 + x[:, 0] ** 2, 0.3 * x[:, 1] * x[:, 0]], -1),
                                            np.stack([0.3 * x[:, 1] * x[:, 0], 1.5 + x[:, 1] ** 2], -1)], -2), 2, (2, 2))
    u = callable_net(lambda t, x: x[:, 0] ** 3 + x[:, 0] * x[:, 1] ** 2 - 2 * x[:, 1] ** 3, 2)
    return S, u


def test_divergence_identity_residual_shrinks():
    S, u = _div_identity_setup()
    r = [divergence_identity_residual(S, u, [0.3, -0.2], h) for h in (0.1, 0.05)]
    assert r[1] < r[0] / 3.5
