"""Bump mollifiers and convolution of piecewise polynomials by quadrature.

The profile is the radial bump ``rho(x) = C_d exp(-1 / (1 - |x|^2))`` on the
unit ball of R^d.  Two rescalings give the delta nets used throughout:

* ``model``: ``psi_eps(x) = eps^-d rho(x / eps)``, support radius ``eps``;
* ``log``:   ``psi_eps(x) = g^d rho(g x)`` with ``g = log(1/eps)``, support
  radius ``1 / g``.

Convolution integrals are evaluated by iterated Gauss-Legendre quadrature
over the ball.  Each axis interval is cut into ``panels`` equal panels and,
additionally, at every coordinate where the raw expression has a kink or
jump, so each sub-interval integrates a smooth integrand.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DomainError

MASS_TOL = 1e-10
LOG_GAMMA_FLOOR = 1.0


def _bump(r2):
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


@functools.lru_cache(maxsize=None)
def profile_constant(d):
    """``C_d`` such that the bump integrates to one over the unit ball of R^d."""
    # radial integral with a fine composite Gauss rule; accurate to ~1e-15
    xi, wi = np.polynomial.legendre.leggauss(32)
    edges = np.linspace(0.0, 1.0, 65)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        r = 0.5 * (b - a) * xi + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.sum(wi * r ** (d - 1) * _bump(r * r))
    sphere = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    return 1.0 / (sphere * total)


@dataclass(frozen=True)
class Mollifier:
    """Delta-net family built from the bump profile.

    ``dim`` is the number of convolved variables; ``None`` means "infer from
    the raw expression" (the variables it actually depends on).
    """

    mode: str = "model"
    dim: int | None = None
    radius: float = 1.0
    nodes: int = 32
    panels: int = 4

    def __post_init__(self):
        if self.mode not in ("model", "log"):
            raise ConfigurationError(f"mollifier mode must be 'model' or 'log', got {self.mode!r}")
        if self.radius <= 0:
            raise ConfigurationError("mollifier radius must be positive")

    def gamma(self, eps):
        """Log rescaling factor ``log(1/eps)``, floored at 1 so eps near 1 stays usable."""
        return max(math.log(1.0 / eps), LOG_GAMMA_FLOOR)

    def support_radius(self, eps):
        _check_eps(eps)
        if self.mode == "model":
            return self.radius * eps
        return self.radius / self.gamma(eps)

    def kernel(self, eps, z):
        """Evaluate ``psi_eps`` at points ``z`` of shape (P, d)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        d = z.shape[1]
        s = self.support_radius(eps)
        return profile_constant(d) * s ** (-d) * _bump(np.sum(z * z, axis=1) / (s * s))

    def rule(self, d):
        """Quadrature nodes/weights on the unit ball (no kink cuts)."""
        return _unit_rule(d, self.nodes, self.panels)

    def mass(self, eps, d):
        """Discrete integral of ``psi_eps`` with this mollifier's quadrature rule."""
        s = self.support_radius(eps)
        z, w = self.rule(d)
        return float(np.sum(w * s**d * self.kernel(eps, s * z)))


def _check_eps(eps):
    if not (0.0 < eps <= 1.0):
        raise ConfigurationError(f"epsilon must lie in (0, 1], got {eps}")


@functools.lru_cache(maxsize=None)
def _gauss(q):
    return np.polynomial.legendre.leggauss(q)


@functools.lru_cache(maxsize=None)
def _unit_rule(d, q, panels):
    nodes, weights = _ball_rule(np.zeros((1, d)), 1.0, [np.array([])] * d, q, panels)
    return nodes[0], weights[0]


def _ball_rule(y, s, cuts, q, panels):
    """Iterated Gauss rule on the ball of radius ``s`` centred at the origin.

    ``y`` are the evaluation points (P, d) and ``cuts[k]`` the raw kink
    coordinates along axis k; the integrand ``raw(y - z)`` is non-smooth where
    ``z_k = y_k - cut``.  Returns nodes (P, M, d) and weights (P, M).
    """
    xi, wi = _gauss(q)
    P = y.shape[0]
    d = len(cuts)
    nodes = np.zeros((P, 1, 0))
    weights = np.ones((P, 1))
    for k in range(d):
        half = np.sqrt(np.maximum(s * s - np.sum(nodes**2, axis=2), 0.0))  # (P, M)
        M = half.shape[1]
        fixed = np.linspace(-1.0, 1.0, panels + 1)[None, None, :] * half[:, :, None]
        moving = y[:, k][:, None, None] - np.asarray(cuts[k])[None, None, :]
        moving = np.clip(moving, -half[:, :, None], half[:, :, None])
        moving = np.broadcast_to(moving, (P, M, len(cuts[k])))
        ends = np.sort(np.concatenate([fixed, moving], axis=2), axis=2)  # (P, M, E)
        a, b = ends[:, :, :-1], ends[:, :, 1:]
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        zk = mid[..., None] + rad[..., None] * xi  # (P, M, S, q)
        wk = rad[..., None] * wi
        S = a.shape[2]
        nodes = np.concatenate(
            [np.repeat(nodes, S * q, axis=1), zk.reshape(P, M * S * q, 1)],
            axis=2,
        )
        weights = np.repeat(weights, S * q, axis=1) * wk.reshape(P, M * S * q)
    return nodes, weights


def mollify(raw, m, eps, axes=None, chunk_nodes=2_000_000):
    """Return an evaluator ``(t, x) -> (raw * psi_eps)(t, x)``.

    The convolution runs over ``axes`` (variable indices, 0 = t); by default
    the variables ``raw`` depends on.  Constant expressions are returned
    unchanged, which is exact since the kernel has unit mass.
    """
    _check_eps(eps)
    axes = tuple(raw.active_vars if axes is None else axes)
    d = len(axes)
    if m.dim is not None and d and m.dim != d:
        raise ConfigurationError(f"mollifier dimension {m.dim} does not match {d} convolved variables")
    if d and abs(m.mass(eps, d) - 1.0) > MASS_TOL:
        raise ConfigurationError(
            f"mollifier quadrature has mass {m.mass(eps, d)!r}, not 1 within {MASS_TOL:g}; "
            "increase nodes or panels",
        )
    s = m.support_radius(eps)
    cuts = [raw.kinks(v) for v in axes]

    def evaluate(t, x):
        x = np.asarray(x, dtype=float).reshape(-1, raw.n)
        t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        pts = np.column_stack([t, x])
        if not d:
            return raw.evaluate(pts)
        if not raw.extension:
            lo, hi = raw.box[axes, 0], raw.box[axes, 1]
            yk = pts[:, axes]
            if np.any(yk - s < lo) or np.any(yk + s > hi):
                raise DomainError(
                    f"mollifier support (radius {s:g}) leaves the expression box {raw.box.tolist()}",
                )
        out = np.empty(pts.shape[0])
        per_point = max(1, m.nodes**d * (m.panels + sum(len(c) for c in cuts)) ** d)
        step = max(1, chunk_nodes // per_point)
        for start in range(0, pts.shape[0], step):
            block = pts[start : start + step]
            y = block[:, axes]
            z, w = _ball_rule(y, s, cuts, m.nodes, m.panels)
            P, M, _ = z.shape
            shifted = np.repeat(block[:, None, :], M, axis=1)
            shifted[:, :, axes] -= z
            vals = raw.evaluate(shifted.reshape(P * M, raw.nvars)).reshape(P, M)
            ker = m.kernel(eps, z.reshape(P * M, d)).reshape(P, M)
            out[start : start + step] = np.sum(w * ker * vals, axis=1)
        return out

    evaluate.support_radius = s
    return evaluate
