"""Discrete norms of sampled fields and the plain-text table format.

Supported norm kinds:

``sup``    max of the pointwise magnitude over the compact box ``K``
``W``      ``max_{|a|<=k} sup_K |d^a f|`` (``W^{k,inf}``)
``H``      ``sqrt(sum_{|a|<=k} int_K |d^a f|^2)`` by the trapezoid rule
``mixed``  ``int_0^T sup_x |d^a f(s, .)| ds`` for space-time samples

Vector and matrix values use the pointwise Frobenius magnitude.  Derivatives
are second-order finite differences (``numpy.gradient``) on the sampled,
possibly non-uniform, axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DomainError, ShapeError

NORM_KINDS = ("sup", "W", "H", "mixed")
MAX_ORDER = 2
BOX_TOL = 1e-12


@dataclass
class NormRequest:
    kind: str = "sup"
    K: np.ndarray | None = None
    k: int = 0
    resolution: int = 201
    time_samples: int = 33

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise ConfigurationError(f"unknown norm kind {self.kind!r}; expected one of {NORM_KINDS}")
        if not 0 <= self.k <= MAX_ORDER:
            raise ConfigurationError(f"derivative order {self.k} not supported (max {MAX_ORDER})")
        if self.K is not None:
            self.K = np.asarray(self.K, dtype=float).reshape(-1, 2)

    @property
    def tag(self):
        return self.kind if self.kind == "sup" else f"{self.kind}{self.k}"


@dataclass
class SampledField:
    """Samples on a rectilinear grid.

    ``values`` has shape ``(len(times),)? + tuple(len(a) for a in axes) + value_shape``;
    the leading time axis is present iff ``times`` is not None.
    """

    axes: list
    values: np.ndarray
    times: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = [np.asarray(a, dtype=float) for a in self.axes]
        self.values = np.asarray(self.values, dtype=float)
        grid = tuple(len(a) for a in self.axes)
        lead = () if self.times is None else (len(self.times),)
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
        if self.values.shape[: len(lead) + len(grid)] != lead + grid:
            raise ShapeError(f"values of shape {self.values.shape} do not match grid {lead + grid}")

    @property
    def n(self):
        return len(self.axes)

    @property
    def value_shape(self):
        skip = self.n + (0 if self.times is None else 1)
        return self.values.shape[skip:]


def _magnitude(vals, nval):
    if nval == 0:
        return np.abs(vals)
    return np.sqrt(np.sum(vals * vals, axis=tuple(range(vals.ndim - nval, vals.ndim))))


def _derivatives(vals, axes, k, offset):
    """All ``d^a vals`` with ``|a| = k``; spatial axis j sits at array axis ``offset + j``."""
    n = len(axes)
    out = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        d = vals
        for j in combo:
            if len(axes[j]) < 3:
                raise ConfigurationError("derivatives need at least 3 samples per axis")
            d = np.gradient(d, axes[j], axis=offset + j, edge_order=2)
        out.append(d)
    return out


def _restrict(axes, K):
    """Index selectors of the grid points inside ``K`` (whole grid when K is None)."""
    sel = []
    for j, a in enumerate(axes):
        if K is None:
            sel.append(np.arange(len(a)))
            continue
        lo, hi = K[j]
        span = max(abs(a[-1] - a[0]), 1.0)
        if lo < a[0] - BOX_TOL * span or hi > a[-1] + BOX_TOL * span:
            raise DomainError(f"compact set [{lo}, {hi}] on axis {j} is outside the sampled range [{a[0]}, {a[-1]}]")
        idx = np.nonzero((a >= lo - BOX_TOL * span) & (a <= hi + BOX_TOL * span))[0]
        if not len(idx):
            raise DomainError(f"no sample points inside K on axis {j}")
        sel.append(idx)
    return sel


def _trapezoid_nd(vals, axes):
    out = vals
    for a in reversed(axes):
        out = np.trapezoid(out, a, axis=-1) if len(a) > 1 else out[..., 0]
    return out


def compute_norm(f: SampledField, req: NormRequest) -> float:
    """Discrete norm of sampled data per ``req`` (see module docstring)."""
    if req.K is not None and req.K.shape[0] != f.n:
        raise ConfigurationError(f"K has {req.K.shape[0]} axes, field has {f.n}")
    nval = len(f.value_shape)
    if req.kind == "mixed":
        if f.times is None:
            raise ConfigurationError("the mixed L1-Linf norm needs space-time samples (0,T) x R^n")
        offset = 1
    else:
        offset = 0
    sel = _restrict(f.axes, req.K)
    orders = range(req.k + 1) if req.kind in ("W", "H", "mixed") else [0]
    if req.kind == "sup" and req.k:
        orders = [req.k]

    def restricted(d):
        idx = np.ix_(*([np.arange(d.shape[0])] if offset else []), *sel)
        return d[idx]

    terms = []
    for order in orders:
        for d in _derivatives(f.values, f.axes, order, offset):
            terms.append(_magnitude(restricted(d), nval))

    if req.kind in ("sup", "W"):
        return float(max(np.max(m) for m in terms))
    if req.kind == "H":
        sub_axes = [f.axes[j][s] for j, s in enumerate(sel)]
        return float(math.sqrt(sum(_trapezoid_nd(m * m, sub_axes) for m in terms)))
    # mixed: per-slice spatial sup (max over derivative orders), then trapezoid in t
    per_slice = np.max(np.stack([m.reshape(m.shape[0], -1).max(axis=1) for m in terms]), axis=0)
    if len(f.times) == 1:
        return 0.0
    return float(np.trapezoid(per_slice, f.times))


# -- sampling of nets ------------------------------------------------------------------

def sample_axes(net, eps, K, resolution=201, patch=97, width=2.0):
    """Rectilinear sample axes over ``K`` resolving the net's narrow features.

    A uniform axis is refined near every breakpoint of the net by a patch of
    ``patch`` points spanning ``+-width`` support radii, so the sup of a
    mollified jump derivative is located to within a small fraction of ε.
    """
    K = np.asarray(K, dtype=float).reshape(net.n, 2)
    s = net.scale(eps)
    axes = []
    for j in range(net.n):
        lo, hi = K[j]
        pts = [np.linspace(lo, hi, resolution)]
        if math.isfinite(s):
            for b in net.breaks[j + 1]:
                if lo - width * s <= b <= hi + width * s:
                    loc = b + width * s * np.linspace(-1.0, 1.0, patch)
                    pts.append(loc[(loc >= lo) & (loc <= hi)])
        axes.append(np.unique(np.concatenate(pts)))
    return axes


def sample_times(net, eps, T, samples=33):
    if net.t_independent:
        return np.array([0.0, T])
    pts = [np.linspace(0.0, T, samples)]
    s = net.scale(eps)
    if math.isfinite(s):
        for b in net.breaks[0]:
            if 0.0 <= b <= T:
                loc = b + 2.0 * s * np.linspace(-1.0, 1.0, 33)
                pts.append(loc[(loc >= 0.0) & (loc <= T)])
    return np.unique(np.concatenate(pts))


def sample_net(net, eps, K, resolution=201, t=0.0, times=None):
    """Sample ``net`` at ε on adaptive axes over K, at one time or on ``times``."""
    axes = sample_axes(net, eps, K, resolution)
    if times is None:
        return SampledField(axes, net.sample_grid(eps, t, axes))
    vals = np.stack([net.sample_grid(eps, s, axes) for s in times])
    return SampledField(axes, vals, np.asarray(times, dtype=float))


def net_norm(net, eps, req: NormRequest, T=None, t=0.0):
    """Norm of one member of a net.  ``mixed`` requests need the horizon ``T``."""
    if req.K is None:
        raise ConfigurationError("net norms need an explicit compact set K")
    if req.kind == "mixed":
        if T is None:
            raise ConfigurationError("mixed norm needs the horizon T")
        times = sample_times(net, eps, T, req.time_samples)
        return compute_norm(sample_net(net, eps, req.K, req.resolution, times=times), req)
    if net.t_independent or T is None:
        return compute_norm(sample_net(net, eps, req.K, req.resolution, t=t), req)
    # space-time sup: maximum over time slices
    times = sample_times(net, eps, T, req.time_samples)
    return max(compute_norm(sample_net(net, eps, req.K, req.resolution, t=s), req) for s in times)


# -- text tables -------------------------------------------------------------------

TABLE_MAGIC = "# gfwave-table v1"


def write_table(stream, f: SampledField):
    """Write one row per grid point: ``t x1..xn value...`` with 17 significant digits."""
    n = f.n
    times = f.times if f.times is not None else np.array([f.meta.get("t", 0.0)])
    vshape = f.value_shape
    meta = " ".join(f"{k}={v}" for k, v in sorted(f.meta.items()) if k != "t")
    stream.write(
        f"{TABLE_MAGIC} n={n} nt={'-' if f.times is None else len(times)} "
        f"value_shape={'x'.join(map(str, vshape)) or 'scalar'} {meta}".rstrip() + "\n"
    )
    cols = ["t"] + [f"x{j + 1}" for j in range(n)]
    cols += [f"v{''.join(map(str, i))}" for i in itertools.product(*(range(s) for s in vshape))] or ["v"]
    stream.write("# " + " ".join(cols) + "\n")
    vals = f.values if f.times is not None else f.values[None]
    mesh = np.meshgrid(*f.axes, indexing="ij")
    coords = np.column_stack([m.ravel() for m in mesh])
    for it, t in enumerate(times):
        flat = vals[it].reshape(coords.shape[0], -1)
        for p in range(coords.shape[0]):
            row = [t, *coords[p], *flat[p]]
            stream.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_table(stream) -> SampledField:
    header = stream.readline().split()
    if " ".join(header[:3]) != TABLE_MAGIC:
        raise ConfigurationError("not a gfwave table")
    info = dict(item.split("=", 1) for item in header[3:])
    n = int(info.pop("n"))
    nt = info.pop("nt")
    vs = info.pop("value_shape")
    vshape = () if vs == "scalar" else tuple(int(s) for s in vs.split("x"))
    stream.readline()
    data = np.loadtxt(stream, ndmin=2)
    times = np.unique(data[:, 0])
    axes = [np.unique(data[:, 1 + j]) for j in range(n)]
    grid = tuple(len(a) for a in axes)
    values = data[:, 1 + n:].reshape((len(times),) + grid + vshape)
    meta = {}
    for k, v in info.items():
        try:
            meta[k] = float(v)
        except ValueError:
            meta[k] = v
    if nt == "-":
        meta["t"] = float(times[0])
        return SampledField(axes, values[0], None, meta)
    return SampledField(axes, values, times, meta)
