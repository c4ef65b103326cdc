"""Rewriting between the second-order wave equation and a symmetric first-order system.

Wave form, for ``u(t, x)`` with ``x`` in R^n::

    -u_tt + 2 sum_i g_i d_i u_t + sum_ij R_ij d_i d_j u + a u_t + b . grad u + c u = f

System form, for ``w = (u, z, v)`` with ``z = u_t`` and ``v = S grad u``,
``S = R^(1/2)``::

    -w_t + sum_i A_i d_i w + B w = F

with ``A_i[1,1] = 2 g_i``, ``A_i[1,2+j] = A_i[2+j,1] = S_ij``, ``B[0,1] = 1``,
``B[1,0] = c``, ``B[1,1] = a``, ``B[1,2:] = b_tilde``, ``B[2:,2:] = (dS/dt) S^-1``
and ``F = (0, f, 0)``, where ``b_tilde = Div S + S^-1 (b - Div S^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConfigurationError, NotSPDError, ShapeError, StructureError
from .genfunc.nets import (
    CoefficientNet,
    as_spd,
    derived_net,
    divergence,
    gradient,
    net_arithmetic,
    sqrt_spd_net,
    stack_nets,
    time_derivative,
)

STRUCTURE_TOL = 1e-10


@dataclass
class WaveProblem:
    """Coefficients and data of the wave equation on ``(0, T) x box``.

    ``u0`` and ``u1`` are nets whose time argument is ignored.  The ``box``
    is the spatial computational domain, shape (n, 2).
    """

    n: int
    R: CoefficientNet
    g: CoefficientNet
    a: CoefficientNet
    b: CoefficientNet
    c: CoefficientNet
    f: CoefficientNet
    u0: CoefficientNet
    u1: CoefficientNet
    box: np.ndarray
    T: float
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n
        self.box = np.asarray(self.box, dtype=float).reshape(n, 2)
        want = {"R": (n, n), "g": (n,), "a": (), "b": (n,), "c": (), "f": (), "u0": (), "u1": ()}
        for name, shape in want.items():
            net = getattr(self, name)
            if not isinstance(net, CoefficientNet):
                raise ConfigurationError(f"coefficient {name} must be a CoefficientNet")
            if net.shape != shape or net.n != n:
                raise ShapeError(f"coefficient {name}: expected shape {shape} in dimension {n}, got {net.shape}")
        self.R = as_spd(self.R)
        if self.T <= 0:
            raise ConfigurationError("horizon T must be positive")

    def nets(self):
        return {k: getattr(self, k) for k in ("R", "g", "a", "b", "c", "f", "u0", "u1")}

    def validate(self, eps, t, x):
        """Check R SPD and the assembled metric Lorentzian at the given points.

        Returns the number of points checked; raises :class:`NotSPDError`
        (with the offending point) when R fails to be positive definite.
        """
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        Rv = self.R(eps, t, x)
        gv = self.g(eps, t, x)
        try:
            linalg.spd_sqrt(Rv)
        except NotSPDError as exc:
            loc = exc.location[0] if exc.location else 0
            raise NotSPDError(f"R is not SPD at x={x[loc].tolist()} (eps={eps}): {exc}", x[loc]) from None
        G = linalg.assemble_metric(gv, Rv)
        for k in range(G.shape[0]):
            rep = linalg.lorentzian_check(G[k])
            if rep.verdict != "Lorentzian":
                raise NotSPDError(f"metric is {rep.verdict} at x={x[k].tolist()} (eps={eps})", x[k])
        return x.shape[0]


@dataclass
class HyperbolicSystem:
    n: int
    A: list
    B: CoefficientNet
    F: CoefficientNet
    w0: CoefficientNet
    box: np.ndarray
    T: float
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.n + 2
        self.box = np.asarray(self.box, dtype=float).reshape(self.n, 2)
        if len(self.A) != self.n:
            raise ShapeError(f"expected {self.n} flux matrices, got {len(self.A)}")
        for i, Ai in enumerate(self.A):
            if Ai.shape != (m, m):
                raise ShapeError(f"A_{i + 1} has shape {Ai.shape}, expected {(m, m)}")
        if self.B.shape != (m, m) or self.F.shape != (m,) or self.w0.shape != (m,):
            raise ShapeError("B, F, w0 shapes do not match the system size")

    @property
    def size(self):
        return self.n + 2


def _flux_matrix(i, g, S):
    n = S.n
    m = n + 2

    def func(eps, t, x):
        Sv = S(eps, t, x)
        out = np.zeros((x.shape[0], m, m))
        out[:, 1, 1] = 2.0 * g(eps, t, x)[:, i]
        out[:, 1, 2:] = Sv[:, i, :]
        out[:, 2:, 1] = Sv[:, :, i]
        return out

    return derived_net(n, (m, m), func, [g, S], label=f"A{i + 1}")


def b_tilde_net(b, S, R=None):
    """``Div S + S^-1 (b - Div S^2)``, the first-order coefficient acting on ``v``."""
    R = R if R is not None else as_spd(S @ S)
    Sinv = net_arithmetic(S, None, "inverse")
    return divergence(S) + Sinv @ (b - divergence(R))


def reconstruct_b(b_tilde, S):
    """Inverse of :func:`b_tilde_net`: ``b = S b_tilde - S Div S + Div S^2``."""
    S = as_spd(S)
    R = as_spd(S @ S)
    return S @ b_tilde - S @ divergence(S) + divergence(R)


def wave_to_system(p: WaveProblem) -> HyperbolicSystem:
    """Assemble the symmetric first-order system of a wave problem.

    The square root ``S`` and all derivative terms are evaluated lazily on
    the nets; an SPD failure of ``R`` surfaces as :class:`NotSPDError` when
    the system is first sampled.
    """
    n = p.n
    m = n + 2
    S = sqrt_spd_net(p.R)
    Sinv = net_arithmetic(S, None, "inverse")
    bt = b_tilde_net(p.b, S, p.R)
    lower = time_derivative(S) @ Sinv
    A = [_flux_matrix(i, p.g, S) for i in range(n)]

    def B_func(eps, t, x):
        P = x.shape[0]
        out = np.zeros((P, m, m))
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = p.c(eps, t, x)
        out[:, 1, 1] = p.a(eps, t, x)
        out[:, 1, 2:] = bt(eps, t, x)
        if not lower.t_independent:
            out[:, 2:, 2:] = lower(eps, t, x)
        return out

    B = derived_net(n, (m, m), B_func, [p.c, p.a, bt, lower], label="B")

    def F_func(eps, t, x):
        out = np.zeros((x.shape[0], m))
        out[:, 1] = p.f(eps, t, x)
        return out

    F = derived_net(n, (m,), F_func, [p.f], label="F")

    du0 = gradient(p.u0)

    def w0_func(eps, t, x):
        zero = np.zeros(x.shape[0])
        out = np.zeros((x.shape[0], m))
        out[:, 0] = p.u0(eps, zero, x)
        out[:, 1] = p.u1(eps, zero, x)
        out[:, 2:] = np.einsum("pij,pj->pi", S(eps, zero, x), du0(eps, zero, x))
        return out

    w0 = derived_net(n, (m,), w0_func, [p.u0, p.u1, S], label="w0")
    w0.t_independent = True
    notes = {"S": S, "S_inv": Sinv, "b_tilde": bt, "wave": p, "G00": -1.0}
    return HyperbolicSystem(n, A, B, F, w0, p.box.copy(), p.T, notes)


def _sample_points(box, T, per_axis=5):
    axes = [np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.column_stack([mm.ravel() for mm in mesh])
    ts = np.array([0.0, 0.5 * T, T])
    return np.repeat(ts, x.shape[0]), np.tile(x, (len(ts), 1))


def _structure_violations(s: HyperbolicSystem, eps, t, x, tol):
    n, m = s.n, s.size
    problems = []
    scale = 1.0

    def check(name, block, expect=0.0):
        err = float(np.max(np.abs(block - expect))) if block.size else 0.0
        if err > tol * scale:
            problems.append(f"{name} deviates by {err:.3e}")

    Bv = s.B(eps, t, x)
    Fv = s.F(eps, t, x)
    S_rows = np.zeros((x.shape[0], n, n))
    for i, Ai in enumerate(s.A):
        Av = Ai(eps, t, x)
        scale = max(1.0, float(np.max(np.abs(Av))))
        check(f"A{i + 1} symmetry", Av, np.swapaxes(Av, -1, -2))
        mask = np.ones((m, m), dtype=bool)
        mask[1, 1] = False
        mask[1, 2:] = False
        mask[2:, 1] = False
        check(f"A{i + 1} zero pattern", Av[:, mask])
        S_rows[:, i, :] = Av[:, 1, 2:]
    scale = max(1.0, float(np.max(np.abs(S_rows))))
    check("S block symmetry", S_rows, np.swapaxes(S_rows, -1, -2))
    scale = max(1.0, float(np.max(np.abs(Bv))))
    check("B[0,1] (first row must read z = du/dt)", Bv[:, 0, 1], 1.0)
    check("B first row zero pattern", np.concatenate([Bv[:, 0, :1], Bv[:, 0, 2:]], axis=1))
    check("B lower-left zero pattern", Bv[:, 2:, :2])
    scale = max(1.0, float(np.max(np.abs(Fv))))
    check("F zero pattern", np.concatenate([Fv[:, :1], Fv[:, 2:]], axis=1))
    return problems, S_rows


def system_to_wave(s: HyperbolicSystem, eps_samples=(1.0, 0.0625), tol=STRUCTURE_TOL) -> WaveProblem:
    """Read the wave coefficients back off a first-order system of wave type.

    The block structure is checked at sample points for every ε in
    ``eps_samples``; any violation raises :class:`StructureError`.  The
    returned problem carries in ``notes`` the largest observed mismatch of
    ``w0[2:]`` against ``S grad u0`` and of ``B[2:,2:]`` against
    ``(dS/dt) S^-1``.
    """
    n = s.n
    t, x = _sample_points(s.box, s.T)
    for eps in eps_samples:
        problems, S_rows = _structure_violations(s, eps, t, x, tol)
        if problems:
            raise StructureError("system is not of wave type: " + "; ".join(problems))
        try:
            linalg.spd_sqrt(S_rows @ S_rows)
            linalg.spd_inverse(0.5 * (S_rows + np.swapaxes(S_rows, -1, -2)))
        except NotSPDError as exc:
            raise StructureError(f"S block read off A_i is not SPD/invertible: {exc}") from None

    g = stack_nets([s.A[i][1, 1] * 0.5 for i in range(n)], (n,), label="g")
    S = as_spd(stack_nets([s.A[i][1, 2 + j] for i in range(n) for j in range(n)], (n, n), label="S"))
    R = as_spd(S @ S)
    a = s.B[1, 1]
    c = s.B[1, 0]
    bt = s.B[1, 2:]
    b = reconstruct_b(bt, S)
    f = s.F[1]
    u0 = s.w0[0]
    u1 = s.w0[1]

    notes = {"S": S, "b_tilde": bt}
    w0_err = 0.0
    lower_err = 0.0
    du0 = gradient(u0)
    lower = time_derivative(S) @ net_arithmetic(S, None, "inverse")
    x0 = x[t == 0.0]
    zero = np.zeros(x0.shape[0])
    for eps in eps_samples:
        v0 = s.w0(eps, zero, x0)[:, 2:]
        expect = np.einsum("pij,pj->pi", S(eps, zero, x0), du0(eps, zero, x0))
        w0_err = max(w0_err, float(np.max(np.abs(v0 - expect))))
        lower_err = max(lower_err, float(np.max(np.abs(s.B(eps, t, x)[:, 2:, 2:] - lower(eps, t, x)))))
    notes["w0_consistency"] = w0_err
    notes["lower_block_consistency"] = lower_err
    return WaveProblem(n, R, g, a, b, c, f, u0, u1, s.box.copy(), s.T, notes)


def _spatial(obj, eps, t):
    """Adapt a net or a callable ``x -> values`` to a plain spatial callable."""
    if isinstance(obj, CoefficientNet):
        return lambda x: obj(eps, np.full(x.shape[0], t), x)
    return lambda x: np.asarray(obj(x), dtype=float)


def divergence_identity_residual(S, u, point, h, eps=1.0, t=0.0):
    """``|Tr(S^2 u'') - Div(S^2 u') + <Div S^2, u'>|`` by central differences.

    ``S`` is a matrix net or callable ``x (P, n) -> (P, n, n)``; ``u`` a
    scalar net or callable ``x -> (P,)``.  All derivatives use step ``h`` on
    the common grid around ``point``.
    """
    Sf, uf = _spatial(S, eps, t), _spatial(u, eps, t)
    x0 = np.asarray(point, dtype=float).reshape(1, -1)
    n = x0.shape[1]
    E = np.eye(n) * h

    def R(x):
        Sv = Sf(x)
        return Sv @ Sv

    def grad(x):
        return np.column_stack([(uf(x + E[j]) - uf(x - E[j])) / (2 * h) for j in range(n)])

    # Tr(S^2 u'')
    hess = np.zeros((1, n, n))
    u_c = uf(x0)
    for i in range(n):
        hess[:, i, i] = (uf(x0 + E[i]) - 2 * u_c + uf(x0 - E[i])) / h**2
        for j in range(i + 1, n):
            d = (uf(x0 + E[i] + E[j]) - uf(x0 + E[i] - E[j]) - uf(x0 - E[i] + E[j]) + uf(x0 - E[i] - E[j])) / (4 * h * h)
            hess[:, i, j] = hess[:, j, i] = d
    trace = float(np.sum(R(x0) * hess))
    # Div(S^2 u')
    div_flux = 0.0
    for i in range(n):
        fp = np.einsum("pij,pj->pi", R(x0 + E[i]), grad(x0 + E[i]))[0, i]
        fm = np.einsum("pij,pj->pi", R(x0 - E[i]), grad(x0 - E[i]))[0, i]
        div_flux += (fp - fm) / (2 * h)
    div_R = linalg.matrix_divergence(lambda tt, xx: R(xx), 0.0, x0[0], h)
    inner = float(div_R @ grad(x0)[0])
    return abs(trace - div_flux + inner)
