"""Polynomial wave problems shared by the transform tests and the acceptance run."""

import numpy as np

from gfwave.genfunc import as_spd, callable_net
from gfwave.transform import WaveProblem


def _x(x, i):
    return x[:, i]


def _vec(*cols):
    return np.stack(cols, axis=-1)


def _mat(rows):
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def _net(n, shape, f):
    return callable_net(f, n, shape)


def polynomial_problems():
    """Five problems with polynomial coefficients and data, n in {1, 2}."""
    out = []
    # 1: 1D, x-dependent R, every lower-order term active
    out.append(WaveProblem(
        1,
        as_spd(_net(1, (1, 1), lambda t, x: (2 + _x(x, 0) ** 2)[:, None, None])),
        _net(1, (1,), lambda t, x: _vec(0.3 * _x(x, 0))),
        _net(1, (), lambda t, x: t + 0 * _x(x, 0)),
        _net(1, (1,), lambda t, x: _vec(_x(x, 0) - 1)),
        _net(1, (), lambda t, x: _x(x, 0) ** 2),
        _net(1, (), lambda t, x: 1 + t * _x(x, 0)),
        _net(1, (), lambda t, x: _x(x, 0) ** 3),
        _net(1, (), lambda t, x: 1 - _x(x, 0)),
        [[-1, 1]], 1.0))
    # 2: 1D, time-dependent R
    out.append(WaveProblem(
        1,
        as_spd(_net(1, (1, 1), lambda t, x: ((1 + t) ** 2 * (1 + 0.25 * _x(x, 0) ** 2))[:, None, None])),
        _net(1, (1,), lambda t, x: _vec(0 * _x(x, 0))),
        _net(1, (), lambda t, x: -1 + 0 * _x(x, 0)),
        _net(1, (1,), lambda t, x: _vec(t * _x(x, 0))),
        _net(1, (), lambda t, x: 0 * _x(x, 0)),
        _net(1, (), lambda t, x: _x(x, 0) ** 2 - t),
        _net(1, (), lambda t, x: 1 + _x(x, 0)),
        _net(1, (), lambda t, x: _x(x, 0) ** 2),
        [[-1, 1]], 1.0))
    # 3: 2D, full time-dependent R
    out.append(WaveProblem(
        2,
        as_spd(_net(2, (2, 2), lambda t, x: _mat([[2 + _x(x, 0) ** 2, 0.3 * _x(x, 0) * _x(x, 1)],
                                                   [0.3 * _x(x, 0) * _x(x, 1), 1.5 + t * _x(x, 1) ** 2]]))),
        _net(2, (2,), lambda t, x: _vec(0.2 * _x(x, 0), -0.1 + t * _x(x, 1))),
        _net(2, (), lambda t, x: 1 + _x(x, 0) * _x(x, 1)),
        _net(2, (2,), lambda t, x: _vec(_x(x, 0) ** 2 - _x(x, 1), 0.5 * _x(x, 0) * _x(x, 1))),
        _net(2, (), lambda t, x: 2 + 2 * _x(x, 0) * _x(x, 1)),
        _net(2, (), lambda t, x: 3 * _x(x, 0) - t),
        _net(2, (), lambda t, x: _x(x, 0) * _x(x, 1)),
        _net(2, (), lambda t, x: _x(x, 0) ** 2 - _x(x, 1)),
        [[-1, 1], [-1, 1]], 1.0))
    # 4: 2D, diagonal R
    out.append(WaveProblem(
        2,
        as_spd(_net(2, (2, 2), lambda t, x: _mat([[1 + _x(x, 0) ** 2, 0 * t + 0 * _x(x, 0)],
                                                   [0 * _x(x, 0), 2 + _x(x, 1) ** 2]]))),
        _net(2, (2,), lambda t, x: _vec(0 * _x(x, 0), 0 * _x(x, 0))),
        _net(2, (), lambda t, x: 0 * _x(x, 0)),
        _net(2, (2,), lambda t, x: _vec(_x(x, 1), _x(x, 0))),
        _net(2, (), lambda t, x: -_x(x, 0) ** 2),
        _net(2, (), lambda t, x: 0 * _x(x, 0)),
        _net(2, (), lambda t, x: _x(x, 0) ** 2 + _x(x, 1) ** 2),
        _net(2, (), lambda t, x: 0 * _x(x, 0)),
        [[-1, 1], [-1, 1]], 1.0))
    # 5: 2D, constant full R with a constant shift vector
    out.append(WaveProblem(
        2,
        as_spd(_net(2, (2, 2), lambda t, x: np.broadcast_to([[2.0, 0.5], [0.5, 1.0]], (x.shape[0], 2, 2)).copy())),
        _net(2, (2,), lambda t, x: _vec(0.1 + 0 * _x(x, 0), -0.2 + 0 * _x(x, 0))),
        _net(2, (), lambda t, x: -1 + 0 * _x(x, 0)),
        _net(2, (2,), lambda t, x: _vec(0 * _x(x, 0), 0 * _x(x, 0))),
        _net(2, (), lambda t, x: 0 * _x(x, 0)),
        _net(2, (), lambda t, x: _x(x, 0) * _x(x, 1)),
        _net(2, (), lambda t, x: _x(x, 0) - 2 * _x(x, 1)),
        _net(2, (), lambda t, x: 1 + 0 * _x(x, 0)),
        [[-1, 1], [-1, 1]], 1.0))
    return out


COEFFICIENTS = ("R", "g", "a", "b", "c", "f", "u0", "u1")


def round_trip_errors(p, back, eps=0.1, per_axis=7, times=5):
    """Max abs difference per coefficient on a tensor grid inside the box."""
    axes = [np.linspace(lo + 0.05, hi - 0.05, per_axis) for lo, hi in p.box]
    x = np.column_stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
    errs = {}
    for name in COEFFICIENTS:
        worst = 0.0
        for t in np.linspace(0.0, p.T, times):
            if name in ("u0", "u1") and t > 0:
                continue
            a = getattr(p, name)(eps, t, x)
            b = getattr(back, name)(eps, t, x)
            worst = max(worst, float(np.max(np.abs(a - b))))
        errs[name] = worst
    return errs
