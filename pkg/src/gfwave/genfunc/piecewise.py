"""Piecewise polynomials on axis-aligned space-time regions.

Variables are ordered ``(t, x1, ..., xn)``; index 0 is always time.  A
:class:`PiecewiseExpr` is a list of ``(Region, Poly)`` pieces whose regions
must partition the expression's box.  Outside the box the expression is
extended by clamping coordinates onto the box (constant extension across the
box faces).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import ConfigurationError, DomainError

MAX_DEGREE = 6

VAR_NAMES = {
    1: ("t", "x"),
    2: ("t", "x", "y"),
    3: ("t", "x", "y", "z"),
}


def var_names(n):
    try:
        return VAR_NAMES[n]
    except KeyError:
        raise ConfigurationError(f"spatial dimension must be 1, 2 or 3, got {n}") from None


class Poly:
    """Sparse multivariate polynomial: ``{exponent tuple: coefficient}``."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        for exps, c in (terms or {}).items():
            c = float(c)
            if c != 0.0:
                self.terms[tuple(exps)] = c

    @classmethod
    def const(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars, index):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_constant(self):
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self):
        return self.terms.get((0,) * self.nvars, 0.0)

    def depends_on(self, index):
        return any(e[index] > 0 for e in self.terms)

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Poly(self.nvars, out)

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
        return Poly(self.nvars, out)

    def scale(self, s):
        return Poly(self.nvars, {e: c * s for e, c in self.terms.items()})

    def __pow__(self, k):
        result = Poly.const(self.nvars, 1.0)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other):
        return isinstance(other, Poly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[0])
        for exps, c in self.terms.items():
            term = np.full(pts.shape[0], c)
            for i, k in enumerate(exps):
                if k:
                    term = term * pts[:, i] ** k
            out += term
        return out

    def to_str(self, names):
        if not self.terms:
            return "0"
        parts = []
        for exps, c in sorted(self.terms.items()):
            factors = [f"{names[i]}**{k}" if k > 1 else names[i] for i, k in enumerate(exps) if k]
            parts.append("*".join([repr(c)] + factors) if factors else repr(c))
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly({self.to_str(['t', 'x', 'y', 'z'][: self.nvars])})"


class Region:
    """Axis-aligned box with per-variable bounds; infinite bounds allowed.

    Boundaries have measure zero and are not tracked as open or closed;
    points exactly on an internal boundary evaluate with the piece on the
    upper side.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.lo >= self.hi):
            raise ConfigurationError(f"empty region: lo={self.lo}, hi={self.hi}")

    @classmethod
    def everywhere(cls, nvars):
        return cls(np.full(nvars, -np.inf), np.full(nvars, np.inf))

    def intersect(self, other):
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo >= hi):
            return None
        return Region(lo, hi)

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts < self.hi), axis=1)

    def __eq__(self, other):
        return isinstance(other, Region) and np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __repr__(self):
        return f"Region(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def _cell_centers(edges):
    c = []
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isfinite(a) and math.isfinite(b):
            c.append(0.5 * (a + b))
        elif math.isfinite(b):
            c.append(b - 1.0)
        elif math.isfinite(a):
            c.append(a + 1.0)
        else:
            c.append(0.0)
    return np.array(c)


class PiecewiseExpr:
    """Piecewise polynomial in ``(t, x1..xn)`` on a box.

    Parameters
    ----------
    n : spatial dimension (1..3)
    box : array (n+1, 2), bounds for t and each spatial variable; may be infinite
    pieces : list of (Region, Poly)
    extension : if True, evaluation outside the box clamps onto the box;
        otherwise it raises :class:`DomainError`.
    """

    def __init__(self, n, box, pieces, extension=True):
        var_names(n)
        self.n = n
        self.nvars = n + 1
        self.box = np.array(box, dtype=float).reshape(self.nvars, 2)
        if np.any(self.box[:, 0] >= self.box[:, 1]):
            raise ConfigurationError(f"degenerate box {self.box.tolist()}")
        self.pieces = list(pieces)
        self.extension = extension
        if not self.pieces:
            raise ConfigurationError("piecewise expression without pieces")
        for k, (_, poly) in enumerate(self.pieces):
            if poly.nvars != self.nvars:
                raise ConfigurationError(f"piece {k}: polynomial in {poly.nvars} variables, expected {self.nvars}")
            if poly.degree > MAX_DEGREE:
                raise ConfigurationError(f"piece {k}: degree {poly.degree} exceeds {MAX_DEGREE}")
        self._build_lookup()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, n, box, value, extension=True):
        return cls(n, box, [(Region.everywhere(n + 1), Poly.const(n + 1, value))], extension)

    @classmethod
    def from_poly(cls, n, box, poly, extension=True):
        return cls(n, box, [(Region.everywhere(n + 1), poly)], extension)

    def _build_lookup(self):
        lo, hi = self.box[:, 0], self.box[:, 1]
        breaks = []
        for v in range(self.nvars):
            b = set()
            for region, _ in self.pieces:
                for bound in (region.lo[v], region.hi[v]):
                    if math.isfinite(bound) and lo[v] < bound < hi[v]:
                        b.add(float(bound))
            breaks.append(np.array(sorted(b)))
        self.breaks = breaks
        edges = [np.concatenate([[lo[v]], breaks[v], [hi[v]]]) for v in range(self.nvars)]
        centers = [_cell_centers(e) for e in edges]
        shape = tuple(len(c) for c in centers)
        lookup = np.empty(shape, dtype=int)
        for idx in itertools.product(*(range(s) for s in shape)):
            pt = np.array([[centers[v][idx[v]] for v in range(self.nvars)]])
            owners = [k for k, (region, _) in enumerate(self.pieces) if region.contains(pt)[0]]
            if not owners:
                raise ConfigurationError(f"regions leave a gap near point {pt[0].tolist()}")
            if len(owners) > 1:
                raise ConfigurationError(
                    f"regions {owners[0]} and {owners[1]} overlap near point {pt[0].tolist()}",
                )
            lookup[idx] = owners[0]
        self._lookup = lookup

    # -- queries -----------------------------------------------------------------
    @property
    def active_vars(self):
        """Variables the expression actually depends on."""
        out = []
        for v in range(self.nvars):
            if len(self.breaks[v]) or any(poly.depends_on(v) for _, poly in self.pieces):
                out.append(v)
        return tuple(out)

    def is_constant(self):
        return not self.active_vars and len({p.constant_value() for _, p in self.pieces}) == 1

    @property
    def max_degree(self):
        return max(p.degree for _, p in self.pieces)

    def kinks(self, v):
        """Coordinates along variable ``v`` where the expression may fail to be smooth."""
        pts = list(self.breaks[v])
        if self.extension:
            for face in self.box[v]:
                if math.isfinite(face):
                    pts.append(float(face))
        return np.array(sorted(set(pts)))

    def evaluate(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.nvars:
            raise ConfigurationError(f"expected points with {self.nvars} coordinates, got {pts.shape[1]}")
        lo, hi = self.box[:, 0], self.box[:, 1]
        if self.extension:
            pts = np.clip(pts, lo, hi)
        elif np.any(pts < lo) or np.any(pts > hi):
            bad = np.argwhere(np.any((pts < lo) | (pts > hi), axis=1))[0, 0]
            raise DomainError(f"point {pts[bad].tolist()} outside expression box {self.box.tolist()}")
        idx = tuple(np.searchsorted(self.breaks[v], pts[:, v], side="right") for v in range(self.nvars))
        owner = self._lookup[idx]
        out = np.empty(pts.shape[0])
        for k in np.unique(owner):
            sel = owner == k
            out[sel] = self.pieces[k][1](pts[sel])
        return out

    def __call__(self, t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        t = np.broadcast_to(t, (x.shape[0],))
        return self.evaluate(np.column_stack([t, x]))

    # -- algebra -----------------------------------------------------------------
    def combine(self, other, op):
        """Pointwise ``op(self, other)`` on the common refinement of both partitions."""
        if not isinstance(other, PiecewiseExpr):
            other = PiecewiseExpr.constant(self.n, self.box, float(other), self.extension)
        if other.n != self.n or not np.array_equal(other.box, self.box):
            raise ConfigurationError("cannot combine piecewise expressions on different boxes")
        lo, hi = self.box[:, 0], self.box[:, 1]
        edges = []
        for v in range(self.nvars):
            b = sorted(set(self.breaks[v]) | set(other.breaks[v]))
            edges.append(np.concatenate([[lo[v]], b, [hi[v]]]))
        centers = [_cell_centers(e) for e in edges]
        pieces = []
        for idx in itertools.product(*(range(len(c)) for c in centers)):
            pt = np.array([[centers[v][idx[v]] for v in range(self.nvars)]])
            p1 = self._piece_at(pt)
            p2 = other._piece_at(pt)
            # outermost cells extend to infinity so the partition covers the box regardless of clamping
            rlo = [edges[v][idx[v]] if idx[v] > 0 else -np.inf for v in range(self.nvars)]
            rhi = [edges[v][idx[v] + 1] if idx[v] + 1 < len(centers[v]) else np.inf for v in range(self.nvars)]
            pieces.append((Region(rlo, rhi), op(p1, p2)))
        return PiecewiseExpr(self.n, self.box, _merge_equal(pieces), self.extension and other.extension)

    def _piece_at(self, pt):
        idx = tuple(np.searchsorted(self.breaks[v], pt[:, v], side="right")[0] for v in range(self.nvars))
        return self.pieces[self._lookup[idx]][1]

    def __add__(self, other):
        return self.combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self.combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self.combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self.combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return PiecewiseExpr(self.n, self.box, [(r, -p) for r, p in self.pieces], self.extension)

    def __pow__(self, k):
        return PiecewiseExpr(self.n, self.box, [(r, p ** k) for r, p in self.pieces], self.extension)

    def scale(self, s):
        return PiecewiseExpr(self.n, self.box, [(r, p.scale(s)) for r, p in self.pieces], self.extension)

    def __repr__(self):
        names = var_names(self.n)
        body = "; ".join(f"{r.lo.tolist()}..{r.hi.tolist()}: {p.to_str(names)}" for r, p in self.pieces)
        return f"PiecewiseExpr(n={self.n}, {body})"


def _merge_equal(pieces):
    """Collapse to a single piece when every cell carries the same polynomial."""
    first = pieces[0][1]
    if all(p == first for _, p in pieces):
        return [(Region.everywhere(len(pieces[0][0].lo)), first)]
    return pieces


def heaviside(n, box, var, threshold, sign=1.0, extension=True):
    """``H(sign * (x_var - threshold))`` as a two-piece expression."""
    nvars = n + 1
    lo = np.full(nvars, -np.inf)
    hi = np.full(nvars, np.inf)
    lower_hi = hi.copy()
    lower_hi[var] = threshold
    upper_lo = lo.copy()
    upper_lo[var] = threshold
    below, above = (0.0, 1.0) if sign > 0 else (1.0, 0.0)
    box = np.asarray(box, dtype=float).reshape(nvars, 2)
    if not (box[var, 0] < threshold < box[var, 1]):
        value = above if threshold <= box[var, 0] else below
        return PiecewiseExpr.constant(n, box, value, extension)
    return PiecewiseExpr(
        n,
        box,
        [(Region(lo, lower_hi), Poly.const(nvars, below)), (Region(upper_lo, hi), Poly.const(nvars, above))],
        extension,
    )
