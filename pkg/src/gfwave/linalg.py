"""Small dense symmetric-matrix kernels.

Every routine accepts a single matrix ``(n, n)`` or a stack ``(..., n, n)``;
the Jacobi sweeps are vectorised across the stack, which is how pointwise
metric blocks on a whole grid are diagonalised at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteError, NotSPDError, ShapeError

JACOBI_TOL = 1e-14
MAX_SWEEPS = 60
SIGNATURE_TOL = 1e-10


@dataclass
class EigenDecomposition:
    """Eigenvalues ascending; ``vectors[..., :, k]`` is the k-th eigenvector.

    ``U`` holds the eigenvectors as rows so that ``A = U.T @ diag(values) @ U``.
    """

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0

    @property
    def U(self):
        return np.swapaxes(self.vectors, -1, -2)

    def reconstruct(self):
        return (self.vectors * self.values[..., None, :]) @ np.swapaxes(self.vectors, -1, -2)


@dataclass
class SignatureReport:
    negative: int
    zero: int
    positive: int
    index: int
    verdict: str
    eigenvalues: np.ndarray


def _as_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ShapeError(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("matrix has non-finite entries")
    AT = np.swapaxes(A, -1, -2)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.any(np.abs(A - AT) > 1e-12 * max(scale, 1e-300)):
        raise ShapeError("matrix is not symmetric")
    return 0.5 * (A + AT)


def _off_norm(A):
    n = A.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.where(mask, A * A, 0.0), axis=(-1, -2)))


def sym_eig(A):
    """Cyclic Jacobi eigen-decomposition of symmetric matrices.

    Rotations continue until the off-diagonal Frobenius mass drops below
    ``1e-14 * ||A||_F`` for every matrix in the stack.  Eigenvectors are
    normalised so that their first non-negligible component is positive.
    """
    A = _as_symmetric(A).copy()
    n = A.shape[-1]
    batch = A.shape[:-2]
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    fro = np.sqrt(np.sum(A * A, axis=(-1, -2)))
    target = JACOBI_TOL * fro
    sweeps = 0
    while sweeps < MAX_SWEEPS and np.any(_off_norm(A) > target):
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[..., p, q]
                app = A[..., p, p]
                aqq = A[..., q, q]
                active = np.abs(apq) > 1e-300
                safe = np.where(active, apq, 1.0)
                theta = (aqq - app) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                th = np.where(big, 1.0, theta)
                t = np.sign(th) / (np.abs(th) + np.sqrt(th * th + 1.0))
                # for huge theta, t ~ 1 / (2 theta) without squaring
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c_, s_ = c[..., None], s[..., None]
                Ap, Aq = A[..., :, p].copy(), A[..., :, q].copy()
                A[..., :, p] = c_ * Ap - s_ * Aq
                A[..., :, q] = s_ * Ap + c_ * Aq
                Ap, Aq = A[..., p, :].copy(), A[..., q, :].copy()
                A[..., p, :] = c_ * Ap - s_ * Aq
                A[..., q, :] = s_ * Ap + c_ * Aq
                A[..., p, q] = 0.0
                A[..., q, p] = 0.0
                Vp, Vq = V[..., :, p].copy(), V[..., :, q].copy()
                V[..., :, p] = c_ * Vp - s_ * Vq
                V[..., :, q] = s_ * Vp + c_ * Vq
    values = np.diagonal(A, axis1=-2, axis2=-1).copy()
    order = np.argsort(values, axis=-1, kind="stable")
    values = np.take_along_axis(values, order, axis=-1)
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    # sign convention: first component above noise level is positive
    lead = np.abs(V) > 1e-12
    first = np.argmax(lead, axis=-2)
    pick = np.take_along_axis(V, first[..., None, :], axis=-2)[..., 0, :]
    V = V * np.where(pick < 0.0, -1.0, 1.0)[..., None, :]
    if batch == ():
        values, V = values.reshape(n), V.reshape(n, n)
    return EigenDecomposition(values, V, sweeps)


def _spd_check(R, eig, floor):
    fro = np.sqrt(np.sum(R * R, axis=(-1, -2)))
    limit = 1e-12 * fro if floor is None else np.broadcast_to(floor, fro.shape)
    bad = eig.values[..., 0] <= limit
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        loc = tuple(int(i) for i in where) if np.ndim(bad) else None
        lam = np.atleast_1d(eig.values[..., 0])[tuple(where)] if np.ndim(bad) else eig.values[0]
        raise NotSPDError(f"matrix not positive definite (smallest eigenvalue {float(lam):.3e})", loc)


def spd_sqrt(R, floor=None):
    """Symmetric positive definite square root ``S = V diag(sqrt(lam)) V^T``."""
    R = _as_symmetric(R)
    eig = sym_eig(R)
    _spd_check(R, eig, floor)
    V = eig.vectors
    S = (V * np.sqrt(eig.values)[..., None, :]) @ np.swapaxes(V, -1, -2)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def spd_inverse(R, floor=None):
    R = _as_symmetric(R)
    eig = sym_eig(R)
    _spd_check(R, eig, floor)
    V = eig.vectors
    Ri = (V / eig.values[..., None, :]) @ np.swapaxes(V, -1, -2)
    return 0.5 * (Ri + np.swapaxes(Ri, -1, -2))


def assemble_metric(g, R):
    """``G = [[-1, g^T], [g, R]]`` for a single point or a stack of points."""
    g = np.asarray(g, dtype=float)
    R = np.asarray(R, dtype=float)
    n = R.shape[-1]
    G = np.zeros(R.shape[:-2] + (n + 1, n + 1))
    G[..., 0, 0] = -1.0
    G[..., 0, 1:] = g
    G[..., 1:, 0] = g
    G[..., 1:, 1:] = R
    return G


def lorentzian_check(G):
    """Eigenvalue signature of a single symmetric matrix.

    Eigenvalues with modulus at most ``1e-10 * ||G||_F`` count as zero.
    """
    G = _as_symmetric(G)
    if G.ndim != 2:
        raise ShapeError("lorentzian_check takes one matrix; loop over stacks explicitly")
    lam = sym_eig(G).values
    tol = SIGNATURE_TOL * np.linalg.norm(G)
    zero = int(np.sum(np.abs(lam) <= tol))
    neg = int(np.sum(lam < -tol))
    pos = int(np.sum(lam > tol))
    if zero:
        verdict = "degenerate"
    elif neg == 0:
        verdict = "Riemannian"
    elif neg == 1:
        verdict = "Lorentzian"
    else:
        verdict = "other"
    return SignatureReport(neg, zero, pos, neg, verdict, lam)


def _stencil_points(t, x, h, axis, domain):
    """Points ``x +- h e_axis`` (axis 0 = time) with an optional domain check."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(x, dtype=float)
    x = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x.reshape(1, -1) if t.size == 1 else x.reshape(-1, 1)
    t = np.broadcast_to(t, (x.shape[0],))
    tp, tm, xp, xm = t.copy(), t.copy(), x.copy(), x.copy()
    if axis == 0:
        tp = tp + h
        tm = tm - h
    else:
        xp[:, axis - 1] += h
        xm[:, axis - 1] -= h
    if domain is not None:
        box = np.asarray(domain, dtype=float).reshape(-1, 2)
        full_p = np.column_stack([tp, xp]) if box.shape[0] == x.shape[1] + 1 else xp
        full_m = np.column_stack([tm, xm]) if box.shape[0] == x.shape[1] + 1 else xm
        for pts in (full_p, full_m):
            if np.any(pts < box[:, 0]) or np.any(pts > box[:, 1]):
                raise DomainError(f"central-difference stencil of width {h:g} leaves the domain {box.tolist()}")
    return (tp, xp), (tm, xm)


def matrix_divergence(S, t, x, h, domain=None):
    """``(Div S)_i = sum_j d S_ij / d x_j`` by central differences of step ``h``.

    ``S`` is a callable ``(t, x) -> (P, n, n)``; ``x`` is one point ``(n,)``
    or a stack ``(P, n)``.  Returns ``(n,)`` or ``(P, n)``.
    """
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim <= 1 and np.ndim(t) == 0
    n = x_arr.shape[-1] if x_arr.ndim else 1
    x2 = x_arr.reshape(-1, n)
    out = 0.0
    for j in range(n):
        (tp, xp), (tm, xm) = _stencil_points(t, x2, h, j + 1, domain)
        Sp = np.asarray(S(tp, xp)).reshape(-1, n, n)
        Sm = np.asarray(S(tm, xm)).reshape(-1, n, n)
        out = out + (Sp[:, :, j] - Sm[:, :, j]) / (2.0 * h)
    return out[0] if single else out


def time_derivative(S, t, x, h, domain=None):
    """``d/dt`` of a matrix (or any array-valued) field by the same central stencil."""
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim <= 1 and np.ndim(t) == 0
    n = x_arr.shape[-1] if x_arr.ndim else 1
    (tp, xp), (tm, xm) = _stencil_points(t, x_arr.reshape(-1, n), h, 0, domain)
    d = (np.asarray(S(tp, xp)) - np.asarray(S(tm, xm))) / (2.0 * h)
    return d[0] if single else d
