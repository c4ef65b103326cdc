"""Epsilon-indexed families of smooth fields.

A :class:`CoefficientNet` wraps an evaluator ``func(eps, t, x)`` with
``t`` of shape (P,) and ``x`` of shape (P, n), returning ``(P,) + shape``.
Nets are built from parsed expressions (mollified when the raw data has
breakpoints, used as they are otherwise), combined ε-wise by arithmetic and
differentiated by central differences.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .. import linalg
from ..errors import ConfigurationError, ShapeError
from .expr import ClosedForm
from .mollifier import Mollifier, mollify
from .piecewise import PiecewiseExpr

MOLLIFIED = "mollified"
CLOSED_FORM = "closed-form"
DERIVED = "derived"

DEFAULT_STEP = 1e-4
STEP_FRACTION = 1.0 / 32.0


class CoefficientNet:
    """ε-indexed smooth field on space-time.

    Attributes
    ----------
    n : spatial dimension
    shape : value shape, ``()``, ``(m,)`` or ``(m, k)``
    provenance : one of ``mollified``, ``closed-form``, ``derived``
    spd : matrix values are symmetric positive definite (checked where used)
    eps_independent, t_independent : structural facts used to skip work
    breaks : per variable (t first) coordinates where features concentrate
    """

    def __init__(self, n, shape, func, provenance, *, spd=False, eps_independent=False,
                 t_independent=False, scale=None, breaks=None, label=""):
        self.n = int(n)
        self.shape = tuple(shape)
        self.func = func
        self.provenance = provenance
        self.spd = bool(spd)
        self.eps_independent = bool(eps_independent)
        self.t_independent = bool(t_independent)
        self._scale = scale
        self.breaks = tuple(np.asarray(b, dtype=float) for b in (breaks or [()] * (self.n + 1)))
        self.label = label
        self._cache = {}
        self._lock = threading.Lock()
        if self.spd and (len(self.shape) != 2 or self.shape[0] != self.shape[1]):
            raise ShapeError("only square matrix nets can be tagged SPD")

    def __repr__(self):
        return f"CoefficientNet({self.label or '?'}, shape={self.shape}, {self.provenance})"

    # -- evaluation --------------------------------------------------------------
    def __call__(self, eps, t, x):
        x = np.asarray(x, dtype=float)
        if x.ndim <= 1:
            x = x.reshape(-1, self.n) if self.n > 1 or x.ndim == 0 else x.reshape(-1, 1)
        t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        out = np.asarray(self.func(eps, t, x), dtype=float)
        want = (x.shape[0],) + self.shape
        if out.shape != want:
            out = np.broadcast_to(out, want)
        return out

    def scale(self, eps):
        """Smallest length on which the field varies (``inf`` for ε-independent smooth data)."""
        return math.inf if self._scale is None else float(self._scale(eps))

    def derivative_step(self, eps):
        return min(DEFAULT_STEP, self.scale(eps) * STEP_FRACTION)

    def sample_grid(self, eps, t, axes):
        """Values on the tensor grid ``axes`` at time ``t``, shape ``grid + self.shape``.

        Results are cached per (ε, t, grid); the cache is written once per key.
        """
        key = (float(eps), float(t), tuple((len(a), a.tobytes()) for a in map(np.asarray, axes)))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = self(eps, np.full(pts.shape[0], float(t)), pts)
        vals = vals.reshape(mesh[0].shape + self.shape)
        vals.setflags(write=False)
        with self._lock:
            self._cache.setdefault(key, vals)
        return vals

    def clear_cache(self):
        with self._lock:
            self._cache.clear()

    # -- structure -----------------------------------------------------------------
    def __getitem__(self, index):
        probe = np.empty(self.shape)[index]
        out_shape = probe.shape
        full = (slice(None),) + (index if isinstance(index, tuple) else (index,))
        return CoefficientNet(
            self.n, out_shape, lambda eps, t, x: self(eps, t, x)[full], DERIVED,
            eps_independent=self.eps_independent, t_independent=self.t_independent,
            scale=self._scale, breaks=self.breaks, label=f"{self.label}[{index}]",
        )

    def __add__(self, other):
        return net_arithmetic(self, other, "+")

    def __radd__(self, other):
        return net_arithmetic(other, self, "+")

    def __sub__(self, other):
        return net_arithmetic(self, other, "-")

    def __rsub__(self, other):
        return net_arithmetic(other, self, "-")

    def __mul__(self, other):
        return net_arithmetic(self, other, "*")

    def __rmul__(self, other):
        return net_arithmetic(other, self, "*")

    def __matmul__(self, other):
        return net_arithmetic(self, other, "@")

    def __neg__(self):
        return net_arithmetic(-1.0, self, "*")

    @property
    def T(self):
        if len(self.shape) != 2:
            raise ShapeError("transpose needs a matrix net")
        return _derived(self.n, self.shape[::-1], lambda eps, t, x: np.swapaxes(self(eps, t, x), -1, -2), [self],
                        spd=self.spd, label=f"{self.label}^T")


# -- constructors ------------------------------------------------------------------

def constant_net(value, n, label=""):
    value = np.asarray(value, dtype=float)
    shape = value.shape

    def func(eps, t, x):
        return np.broadcast_to(value, (x.shape[0],) + shape)

    spd = False
    if value.ndim == 2 and value.shape[0] == value.shape[1] and np.allclose(value, value.T):
        spd = bool(np.all(np.linalg.eigvalsh(value) > 1e-12 * max(np.linalg.norm(value), 1e-300)))
    return CoefficientNet(n, shape, func, CLOSED_FORM, spd=spd, eps_independent=True,
                          t_independent=True, label=label or str(value.tolist()))


def callable_net(func, n, shape=(), *, t_independent=False, label=""):
    """ε-independent closed-form net from ``func(t, x) -> (P,) + shape``."""
    return CoefficientNet(n, shape, lambda eps, t, x: func(t, x), CLOSED_FORM,
                          eps_independent=True, t_independent=t_independent, label=label)


def expr_net(raw, mollifier=None, label=""):
    """Embed one parsed scalar expression as a net.

    Closed-form expressions and single-piece polynomials are smooth and are
    used as they are (ε-independent).  Expressions with breakpoints are
    mollified with ``mollifier`` (model delta net by default).
    """
    if isinstance(raw, ClosedForm):
        return CoefficientNet(raw.n, (), lambda eps, t, x: raw(t, x), CLOSED_FORM,
                              eps_independent=True, t_independent=not raw.uses_t, label=label or raw.text)
    if not isinstance(raw, PiecewiseExpr):
        raise ConfigurationError(f"cannot build a net from {type(raw).__name__}")
    t_indep = 0 not in raw.active_vars
    if not any(len(b) for b in raw.breaks):
        return CoefficientNet(raw.n, (), lambda eps, t, x: raw(t, x), CLOSED_FORM,
                              eps_independent=True, t_independent=t_indep, label=label or repr(raw))
    m = mollifier or Mollifier()
    evaluators = {}
    lock = threading.Lock()

    def func(eps, t, x):
        ev = evaluators.get(eps)
        if ev is None:
            ev = mollify(raw, m, eps)
            with lock:
                evaluators[eps] = ev
        return ev(t, x)

    breaks = [raw.kinks(v) if v in raw.active_vars else () for v in range(raw.nvars)]
    return CoefficientNet(raw.n, (), func, MOLLIFIED, t_independent=t_indep,
                          scale=m.support_radius, breaks=breaks, label=label or repr(raw))


def stack_nets(entries, shape, spd=False, label=""):
    """Assemble scalar nets (row-major) into a vector or matrix net."""
    entries = [e if isinstance(e, CoefficientNet) else None for e in entries]
    if any(e is None for e in entries) or any(e.shape != () for e in entries):
        raise ShapeError("stack_nets needs scalar nets")
    shape = tuple(shape)
    if int(np.prod(shape, dtype=int)) != len(entries):
        raise ShapeError(f"{len(entries)} entries cannot fill shape {shape}")
    n = entries[0].n

    def func(eps, t, x):
        cols = [e(eps, t, x) for e in entries]
        return np.stack(cols, axis=-1).reshape((x.shape[0],) + shape)

    net = _derived(n, shape, func, entries, label=label)
    net.provenance = entries[0].provenance if len({e.provenance for e in entries}) == 1 else DERIVED
    if spd:
        net.spd = True
    return net


# -- combination helpers -------------------------------------------------------------

def _merged_breaks(nets):
    n1 = nets[0].n + 1
    out = []
    for v in range(n1):
        pts = np.concatenate([np.asarray(m.breaks[v], dtype=float) for m in nets]) if nets else np.array([])
        out.append(np.unique(pts))
    return out


def _derived(n, shape, func, parents, *, spd=False, label=""):
    scales = [p._scale for p in parents if p._scale is not None]

    def scale(eps):
        return min(s(eps) for s in scales)

    return CoefficientNet(
        n, shape, func, DERIVED, spd=spd,
        eps_independent=all(p.eps_independent for p in parents),
        t_independent=all(p.t_independent for p in parents),
        scale=scale if scales else None, breaks=_merged_breaks(parents), label=label,
    )


def derived_net(n, shape, func, parents, label=""):
    """Net computed pointwise from ``parents``; structural flags are inherited."""
    return _derived(n, shape, func, list(parents), label=label)


def _as_net(value, n):
    return value if isinstance(value, CoefficientNet) else constant_net(value, n)


def _expand(vals, own, target):
    """Broadcast scalar-valued samples ``(P,)`` against a tensor shape."""
    if own == () and target != ():
        return vals.reshape(vals.shape + (1,) * len(target))
    return vals


def net_arithmetic(a, b, op):
    """ε-wise ``a op b`` for ``op`` in ``+ - * @`` or ``inverse`` (``b`` ignored).

    ``+``, ``-`` and ``*`` act elementwise; a scalar net broadcasts against
    any shape.  ``@`` is the matrix product (matrix-matrix or matrix-vector).
    ``inverse`` is only defined for SPD-tagged matrix nets.
    """
    if op == "inverse":
        if not isinstance(a, CoefficientNet) or not a.spd:
            raise ConfigurationError("inverse is only defined for SPD-tagged matrix nets")
        return _derived(a.n, a.shape, lambda eps, t, x: linalg.spd_inverse(a(eps, t, x)), [a],
                        spd=True, label=f"inv({a.label})")
    n = a.n if isinstance(a, CoefficientNet) else b.n
    a, b = _as_net(a, n), _as_net(b, n)
    if a.n != b.n:
        raise ShapeError(f"nets live in different dimensions ({a.n} and {b.n})")
    sa, sb = a.shape, b.shape
    label = f"({a.label} {op} {b.label})"
    if op in ("+", "-", "*"):
        if sa != sb and sa != () and sb != ():
            raise ShapeError(f"shape mismatch for {op!r}: {sa} and {sb}")
        shape = sa if sa != () else sb
        ufunc = {"+": np.add, "-": np.subtract, "*": np.multiply}[op]

        def func(eps, t, x):
            return ufunc(_expand(a(eps, t, x), sa, shape), _expand(b(eps, t, x), sb, shape))

        spd = op == "+" and a.spd and b.spd
        return _derived(n, shape, func, [a, b], spd=spd, label=label)
    if op == "@":
        if len(sa) != 2 or len(sb) not in (1, 2) or sa[1] != sb[0]:
            raise ShapeError(f"shape mismatch for matrix product: {sa} and {sb}")
        shape = (sa[0],) + sb[1:]
        if len(sb) == 1:
            def func(eps, t, x):
                return np.einsum("pij,pj->pi", a(eps, t, x), b(eps, t, x))
        else:
            def func(eps, t, x):
                return a(eps, t, x) @ b(eps, t, x)
        return _derived(n, shape, func, [a, b], label=label)
    raise ConfigurationError(f"unknown net operation {op!r}")


def sqrt_spd_net(R):
    """Pointwise SPD square root of an SPD-tagged matrix net."""
    if not R.spd:
        raise ConfigurationError("square root needs an SPD-tagged matrix net")
    return _derived(R.n, R.shape, lambda eps, t, x: linalg.spd_sqrt(R(eps, t, x)), [R],
                    spd=True, label=f"sqrt({R.label})")


# -- derivatives ---------------------------------------------------------------------

def _zero_like(net):
    shape = net.shape
    out = _derived(net.n, shape, lambda eps, t, x: np.zeros((x.shape[0],) + shape), [net])
    out.t_independent = True
    return out


def partial(net, var, step=None):
    """Central-difference derivative along variable ``var`` (0 = t, k = x_k).

    The step is ``min(1e-4, scale(eps)/32)`` unless given, so the stencil
    stays well inside the narrowest feature of the net.
    """
    if not 0 <= var <= net.n:
        raise ConfigurationError(f"variable index {var} out of range for n={net.n}")
    if var == 0 and net.t_independent:
        return _zero_like(net)

    def func(eps, t, x):
        h = step if step is not None else net.derivative_step(eps)
        if var == 0:
            return (net(eps, t + h, x) - net(eps, t - h, x)) / (2.0 * h)
        xp, xm = x.copy(), x.copy()
        xp[:, var - 1] += h
        xm[:, var - 1] -= h
        return (net(eps, t, xp) - net(eps, t, xm)) / (2.0 * h)

    name = "t" if var == 0 else f"x{var}"
    return _derived(net.n, net.shape, func, [net], label=f"d{name}({net.label})")


def gradient(net, step=None):
    """Spatial gradient: scalar -> (n,), vector (m,) -> Jacobian (m, n)."""
    if len(net.shape) > 1:
        raise ShapeError("gradient takes scalar or vector nets")
    parts = [partial(net, k + 1, step) for k in range(net.n)]

    def func(eps, t, x):
        return np.stack([p(eps, t, x) for p in parts], axis=-1)

    return _derived(net.n, net.shape + (net.n,), func, [net], label=f"grad({net.label})")


def divergence(net, step=None):
    """Row-wise divergence of an n x n matrix net: ``(Div S)_i = sum_j dS_ij/dx_j``."""
    n = net.n
    if net.shape != (n, n):
        raise ShapeError(f"divergence needs an {n}x{n} matrix net, got {net.shape}")

    def func(eps, t, x):
        h = step if step is not None else net.derivative_step(eps)
        return linalg.matrix_divergence(lambda tt, xx: net(eps, tt, xx), t, x, h)

    return _derived(n, (n,), func, [net], label=f"Div({net.label})")


def time_derivative(net, step=None):
    return partial(net, 0, step)


def as_spd(net):
    """Tag a square matrix net as SPD; the property is checked wherever it is used."""
    if len(net.shape) != 2 or net.shape[0] != net.shape[1]:
        raise ShapeError(f"SPD tag needs a square matrix net, got shape {net.shape}")
    if net.spd:
        return net
    out = _derived(net.n, net.shape, net.func, [net], spd=True, label=net.label)
    out.provenance = net.provenance
    return out
