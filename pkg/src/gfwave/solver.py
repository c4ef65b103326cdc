"""Explicit finite-difference solvers for the system and the wave form.

System form ``w_t = sum_i A_i d_i w + B w - F`` is advanced by Strang
splitting: half a step of the source ODE ``w_t = B w - F`` (Heun), a full
transport step ``w_t = sum_i A_i d_i w`` (Richtmyer two-step Lax-Wendroff,
dimension by dimension in symmetric order, with ``A_i`` sampled at the half
time level), then another source half-step.  The scheme is second order on
smooth data.

The wave form is advanced by leapfrog with central differences in space; the
mixed term ``2 g . grad u_t`` is centred in time, which makes the update
implicit in ``u^{n+1}`` only through ``tau g . D u^{n+1}``.  That term is a
contraction under the CFL bound and is resolved by fixed-point iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import BlowUpError, CFLViolation, ConfigurationError
from .transform import HyperbolicSystem, WaveProblem, wave_to_system

CFL_SAFETY = 0.45
LAMBDA_SAFETY = 1.2
N_DIRECTIONS = 16
GROWTH_LIMIT = 1e8
BOUNDARIES = ("periodic", "extend")


@dataclass
class Grid:
    """Uniform space-time grid.

    Periodic axes hold ``L/h`` nodes (right end excluded); ``extend`` axes
    hold ``L/h + 1`` nodes including both faces, with constant extension of
    the solution beyond them.
    """

    box: np.ndarray
    h: tuple
    tau: float
    steps: int
    boundary: str = "periodic"
    lam_max: float = float("nan")
    cfl: float = CFL_SAFETY
    seed: int = 42

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        self.h = tuple(float(v) for v in np.broadcast_to(self.h, (self.n,)))
        self.axes = []
        for (lo, hi), h in zip(self.box, self.h):
            cells = (hi - lo) / h
            N = int(round(cells))
            if N < 3 or abs(cells - N) > 1e-9 * max(cells, 1.0):
                raise ConfigurationError(f"step {h} does not divide the box side [{lo}, {hi}] into >= 3 cells")
            self.axes.append(lo + h * np.arange(N if self.boundary == "periodic" else N + 1))

    @property
    def n(self):
        return self.box.shape[0]

    @property
    def T(self):
        return self.tau * self.steps

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def times(self):
        return self.tau * np.arange(self.steps + 1)

    def points(self, shift_axis=None, shift=0.0):
        axes = [a + (shift if j == shift_axis else 0.0) for j, a in enumerate(self.axes)]
        return axes

    def courant(self):
        return self.tau * self.lam_max / min(self.h)

    def describe(self):
        return {
            "h": list(self.h), "tau": self.tau, "steps": self.steps, "T": self.T,
            "boundary": self.boundary, "lambda_max": self.lam_max, "cfl": self.cfl,
            "courant": self.courant(), "seed": self.seed,
        }


@dataclass
class GridSolution:
    eps: float
    grid: Grid
    kind: str  # "system" or "wave"
    times: np.ndarray
    snapshots: list
    last_levels: list
    residual: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.last_levels[-1]

    @property
    def u_final(self):
        w = self.final
        return w[..., 0] if self.kind == "system" else w

    def snapshot_array(self):
        return np.stack(self.snapshots)


def estimate_lambda_max(system: HyperbolicSystem, eps, axes, seed=42, directions=N_DIRECTIONS):
    """Largest spectral radius of ``sum_i xi_i A_i`` over seeded random unit ``xi`` at t = 0, times 1.2."""
    n = system.n
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(directions, n))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    if n == 1:
        xi = np.ones((1, 1))
    As = [Ai.sample_grid(eps, 0.0, axes).reshape(-1, n + 2, n + 2) for Ai in system.A]
    lam = 0.0
    for d in xi:
        M = sum(d[i] * As[i] for i in range(n))
        vals = linalg.sym_eig(M).values
        lam = max(lam, float(np.max(np.abs(vals))))
    return LAMBDA_SAFETY * lam


def make_grid(system, h, eps, T=None, boundary="periodic", cfl=CFL_SAFETY, seed=42, tau=None):
    """Grid with ``tau <= cfl * h / lambda_max`` and an integer number of steps reaching T.

    Passing ``tau`` explicitly skips the CFL bound (used to test that a
    violation is detected).
    """
    if isinstance(system, WaveProblem):
        system = wave_to_system(system)
    T = system.T if T is None else T
    probe = Grid(system.box, h, 1.0, 1, boundary, seed=seed)
    lam = estimate_lambda_max(system, eps, probe.axes, seed)
    if tau is None:
        tau_max = cfl * min(probe.h) / max(lam, 1e-300)
        steps = max(1, math.ceil(T / tau_max - 1e-9))
        tau = T / steps
    else:
        steps = max(1, int(round(T / tau)))
    return Grid(system.box, probe.h, tau, steps, boundary, lam, cfl, seed)


# -- stencil helpers -------------------------------------------------------------

def _shift(u, axis, k, boundary):
    """``u`` at node index ``j + k`` along ``axis`` (periodic wrap or clamped)."""
    N = u.shape[axis]
    idx = np.arange(N) + k
    idx = np.mod(idx, N) if boundary == "periodic" else np.clip(idx, 0, N - 1)
    return np.take(u, idx, axis=axis)


def _d1(u, axis, h, boundary):
    return (_shift(u, axis, 1, boundary) - _shift(u, axis, -1, boundary)) / (2.0 * h)


def _d2(u, axis, h, boundary):
    return (_shift(u, axis, 1, boundary) - 2.0 * u + _shift(u, axis, -1, boundary)) / (h * h)


def _matvec(M, w):
    return np.einsum("...ij,...j->...i", M, w)


def _interior(shape, boundary, width=1):
    if boundary == "periodic":
        return tuple(slice(None) for _ in shape)
    return tuple(slice(width, s - width) for s in shape)


class _Sampler:
    """Coefficient samples on the grid, cached by time for time-dependent nets."""

    def __init__(self, net, eps, axes):
        self.net, self.eps, self.axes = net, eps, axes
        self._last = {}

    def at(self, t):
        key = 0.0 if self.net.t_independent else float(t)
        val = self._last.get(key)
        if val is None:
            val = self.net.sample_grid(self.eps, key, self.axes)
            if len(self._last) > 8:
                self._last.clear()
            self._last[key] = val
        return val


def _check_growth(w, ref, step, t):
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    if not math.isfinite(peak):
        raise BlowUpError(f"non-finite values at step {step} (t={t:.6g})", step, t)
    if peak > GROWTH_LIMIT * ref:
        raise BlowUpError(f"solution grew to {peak:.3e} (> {GROWTH_LIMIT:g} x reference {ref:.3e}) "
                          f"at step {step} (t={t:.6g})", step, t)


def _save_plan(steps, save_every):
    if save_every is None:
        return {0, steps}
    return set(range(0, steps + 1, max(1, save_every))) | {steps}


# -- first-order system -------------------------------------------------------------

def solve_system(s, grid: Grid, eps, check_cfl=True, save_every=None):
    """Advance the first-order system on ``grid`` for one ε.

    ``s`` may be a :class:`HyperbolicSystem` or a :class:`WaveProblem`
    (converted first).  Returns a :class:`GridSolution` whose arrays have
    shape ``grid.shape + (n + 2,)``.
    """
    if isinstance(s, WaveProblem):
        s = wave_to_system(s)
    n, bnd, tau = s.n, grid.boundary, grid.tau
    if check_cfl:
        lam = estimate_lambda_max(s, eps, grid.axes, grid.seed)
        if tau * lam / min(grid.h) > grid.cfl * (1.0 + 1e-9):
            raise CFLViolation(
                f"time step {tau:.4g} violates the CFL bound: courant {tau * lam / min(grid.h):.3f} > {grid.cfl}")
    axes = grid.axes
    A_node = [_Sampler(s.A[i], eps, axes) for i in range(n)]
    A_plus = [_Sampler(s.A[i], eps, grid.points(i, 0.5 * grid.h[i])) for i in range(n)]
    A_minus = [_Sampler(s.A[i], eps, grid.points(i, -0.5 * grid.h[i])) for i in range(n)]
    B = _Sampler(s.B, eps, axes)
    F = _Sampler(s.F, eps, axes)

    w = np.array(s.w0.sample_grid(eps, 0.0, axes), dtype=float)
    f0 = float(np.max(np.abs(F.at(0.0)))) if F.net.t_independent else 0.0
    ref = max(1.0, float(np.max(np.abs(w))), f0 * grid.T)
    _check_growth(w, ref, 0, 0.0)

    def source(w, t0, dt):
        Bt, Ft = B.at(t0), F.at(t0)
        k1 = _matvec(Bt, w) - Ft
        w1 = w + dt * k1
        B1, F1 = B.at(t0 + dt), F.at(t0 + dt)
        k2 = _matvec(B1, w1) - F1
        return w + 0.5 * dt * (k1 + k2)

    def transport(w, i, t_mid, dt):
        h = grid.h[i]
        Ap, Am, An = A_plus[i].at(t_mid), A_minus[i].at(t_mid), A_node[i].at(t_mid)
        wp, wm = _shift(w, i, 1, bnd), _shift(w, i, -1, bnd)
        mid_p = 0.5 * (w + wp) + (0.5 * dt / h) * _matvec(Ap, wp - w)
        mid_m = 0.5 * (wm + w) + (0.5 * dt / h) * _matvec(Am, w - wm)
        return w + (dt / h) * _matvec(An, mid_p - mid_m)

    order = list(range(n))
    plan = _save_plan(grid.steps, save_every)
    times, snaps = [0.0], [w.copy()]
    levels = [w.copy()]
    for step in range(1, grid.steps + 1):
        t0 = (step - 1) * tau
        t_mid = t0 + 0.5 * tau
        w = source(w, t0, 0.5 * tau)
        # symmetric dimension sweep: 1..n-1 half steps, n full, back down
        for i in order[:-1]:
            w = transport(w, i, t_mid, 0.5 * tau)
        w = transport(w, order[-1], t_mid, tau)
        for i in reversed(order[:-1]):
            w = transport(w, i, t_mid, 0.5 * tau)
        w = source(w, t_mid, 0.5 * tau)
        _check_growth(w, ref, step, step * tau)
        levels = (levels + [w.copy()])[-3:]
        if step in plan and step != 0:
            times.append(step * tau)
            snaps.append(w.copy())

    sol = GridSolution(eps, grid, "system", np.array(times), snaps, levels)
    sol.residual = system_residual(s, sol) if len(levels) == 3 else float("nan")
    sol.diagnostics = {"courant": grid.courant(), "steps": grid.steps, "residual": sol.residual}
    return sol


def system_residual(s: HyperbolicSystem, sol: GridSolution):
    """Max interior residual of the centred discretisation at the last interior time level."""
    grid, eps = sol.grid, sol.eps
    wm, w0, wp = sol.last_levels
    t = grid.T - grid.tau
    r = -(wp - wm) / (2.0 * grid.tau) - s.F.sample_grid(eps, t, grid.axes) + _matvec(s.B.sample_grid(eps, t, grid.axes), w0)
    for i in range(s.n):
        r = r + _matvec(s.A[i].sample_grid(eps, t, grid.axes), _d1(w0, i, grid.h[i], grid.boundary))
    inner = _interior(grid.shape, grid.boundary)
    return float(np.max(np.abs(r[inner])))


# -- second-order wave form -----------------------------------------------------------

def _wave_operator(u, R, b, c, grid):
    """``R : D^2 u + b . D u + c u`` by central differences."""
    n, bnd = grid.n, grid.boundary
    out = c * u
    for i in range(n):
        h = grid.h[i]
        out = out + R[..., i, i] * _d2(u, i, h, bnd) + b[..., i] * _d1(u, i, h, bnd)
        for j in range(i + 1, n):
            dij = _d1(_d1(u, i, h, bnd), j, grid.h[j], bnd)
            out = out + 2.0 * R[..., i, j] * dij
    return out


def _g_dot_grad(g, u, grid):
    return sum(g[..., i] * _d1(u, i, grid.h[i], grid.boundary) for i in range(grid.n))


def solve_wave(p: WaveProblem, grid: Grid, eps, check_cfl=True, save_every=None, max_iter=60):
    """Leapfrog solution of the wave form on ``grid`` for one ε.

    The first step uses ``u^1 = u0 + tau u1 + tau^2/2 u_tt(0)`` with ``u_tt(0)``
    taken from the equation itself.
    """
    tau, axes = grid.tau, grid.axes
    if check_cfl:
        lam = estimate_lambda_max(wave_to_system(p), eps, axes, grid.seed)
        if tau * lam / min(grid.h) > grid.cfl * (1.0 + 1e-9):
            raise CFLViolation(f"time step {tau:.4g} violates the CFL bound")
    samplers = {k: _Sampler(getattr(p, k), eps, axes) for k in ("R", "g", "a", "b", "c", "f")}

    def coeffs(t):
        return {k: smp.at(t) for k, smp in samplers.items()}

    u0 = np.array(p.u0.sample_grid(eps, 0.0, axes))
    u1 = np.array(p.u1.sample_grid(eps, 0.0, axes))
    fmax = float(np.max(np.abs(samplers["f"].at(0.0))))
    ref = max(1.0, float(np.max(np.abs(u0))), float(np.max(np.abs(u1))) * grid.T, fmax * grid.T**2)

    k0 = coeffs(0.0)
    utt = 2.0 * _g_dot_grad(k0["g"], u1, grid) + _wave_operator(u0, k0["R"], k0["b"], k0["c"], grid) \
        + k0["a"] * u1 - k0["f"]
    prev, cur = u0, u0 + tau * u1 + 0.5 * tau * tau * utt
    _check_growth(cur, ref, 1, tau)
    plan = _save_plan(grid.steps, save_every)
    times, snaps = [0.0], [u0.copy()]
    if 1 in plan:
        times.append(tau)
        snaps.append(cur.copy())
    max_iters_used = 0
    for step in range(1, grid.steps):
        t = step * tau
        k = coeffs(t)
        g, a = k["g"], k["a"]
        rhs = (2.0 * cur - prev) - tau * _g_dot_grad(g, prev, grid) - 0.5 * tau * a * prev \
            + tau * tau * (_wave_operator(cur, k["R"], k["b"], k["c"], grid) - k["f"])
        denom = 1.0 - 0.5 * tau * a
        nxt = (rhs + tau * _g_dot_grad(g, cur, grid)) / denom  # extrapolated start
        if np.any(g != 0.0):
            for it in range(max_iter):
                new = (rhs + tau * _g_dot_grad(g, nxt, grid)) / denom
                delta = float(np.max(np.abs(new - nxt)))
                nxt = new
                if delta <= 1e-14 * max(1.0, float(np.max(np.abs(nxt)))):
                    break
            max_iters_used = max(max_iters_used, it + 1)
        else:
            nxt = rhs / denom
        prev, cur = cur, nxt
        _check_growth(cur, ref, step + 1, (step + 1) * tau)
        if step + 1 in plan:
            times.append((step + 1) * tau)
            snaps.append(cur.copy())

    sol = GridSolution(eps, grid, "wave", np.array(times), snaps, [prev, cur])
    sol.diagnostics = {"courant": grid.courant(), "steps": grid.steps, "fixed_point_iterations": max_iters_used}
    return sol


def wave_residual(p: WaveProblem, grid: Grid, eps, u_prev, u, u_next, t):
    """Max interior residual of the wave equation for three consecutive levels."""
    k = {name: getattr(p, name).sample_grid(eps, t, grid.axes) for name in ("R", "g", "a", "b", "c", "f")}
    tau = grid.tau
    ut = (u_next - u_prev) / (2.0 * tau)
    r = -(u_next - 2.0 * u + u_prev) / tau**2 + 2.0 * _g_dot_grad(k["g"], ut, grid) \
        + _wave_operator(u, k["R"], k["b"], k["c"], grid) + k["a"] * ut - k["f"]
    return float(np.max(np.abs(r[_interior(grid.shape, grid.boundary)])))


# -- equivalence of the two forms ------------------------------------------------------

def _l2(field, grid):
    """Discrete L2 norm ``sqrt(sum |f|^2 prod h)``."""
    return float(math.sqrt(np.sum(field * field) * np.prod(grid.h)))


def fitted_order(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs, errors = np.asarray(hs, dtype=float), np.asarray(errors, dtype=float)
    if np.any(errors <= 0.0):
        return float("inf")
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


def w_relation_residual(s: HyperbolicSystem, sol: GridSolution):
    """``(|z - u_t|_2, |v - S u'|_2)`` at the final time from the system solution alone.

    ``u_t`` is the backward three-point difference over the last levels and
    ``u'`` the central difference in space.
    """
    grid, eps = sol.grid, sol.eps
    w2, w1, w0 = sol.last_levels
    ut = (3.0 * w0[..., 0] - 4.0 * w1[..., 0] + w2[..., 0]) / (2.0 * grid.tau)
    inner = _interior(grid.shape, grid.boundary)
    z_err = _l2((w0[..., 1] - ut)[inner], grid)
    Sv = s.notes["S"].sample_grid(eps, grid.T, grid.axes) if "S" in s.notes else None
    if Sv is None:
        return z_err, float("nan")
    du = np.stack([_d1(w0[..., 0], i, grid.h[i], grid.boundary) for i in range(grid.n)], axis=-1)
    v_err = _l2((w0[..., 2:] - _matvec(Sv, du))[inner], grid)
    return z_err, v_err


def equivalence_check(p: WaveProblem, h, eps, refinements=(1, 2, 4), boundary="periodic",
                      cfl=CFL_SAFETY, seed=42, exact=None):
    """Solve both forms at ``h / r`` for each refinement ``r`` and compare.

    ``exact`` is an optional closed form ``u(t, x)`` (x of shape (P, n)).
    Reports per level the L2 gap between the two u's, the w-relation
    residuals, errors against ``exact``, and fitted orders under refinement.
    """
    s = wave_to_system(p)
    base_h = np.broadcast_to(np.asarray(h, dtype=float), (p.n,))
    rows = []
    for r in refinements:
        grid = make_grid(s, tuple(base_h / r), eps, boundary=boundary, cfl=cfl, seed=seed)
        sys_sol = solve_system(s, grid, eps)
        wave_sol = solve_wave(p, grid, eps)
        inner = _interior(grid.shape, grid.boundary)
        gap = _l2((sys_sol.u_final - wave_sol.u_final)[inner], grid)
        z_err, v_err = w_relation_residual(s, sys_sol)
        row = {"h": float(max(grid.h)), "tau": grid.tau, "steps": grid.steps, "gap_l2": gap,
               "z_relation_l2": z_err, "v_relation_l2": v_err, "system_residual": sys_sol.residual}
        if exact is not None:
            mesh = np.meshgrid(*grid.axes, indexing="ij")
            pts = np.column_stack([m.ravel() for m in mesh])
            ue = np.asarray(exact(grid.T, pts)).reshape(grid.shape)
            row["system_error_l2"] = _l2((sys_sol.u_final - ue)[inner], grid)
            row["wave_error_l2"] = _l2((wave_sol.u_final - ue)[inner], grid)
        rows.append(row)
    hs = [row["h"] for row in rows]
    orders = {}
    for key in ("gap_l2", "z_relation_l2", "v_relation_l2", "system_error_l2", "wave_error_l2"):
        if key in rows[0] and len(rows) >= 2:
            orders[key] = fitted_order(hs, [row[key] for row in rows])
    return {"eps": eps, "levels": rows, "orders": orders}
