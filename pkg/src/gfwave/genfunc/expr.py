"""Coefficient mini-language.

Expressions use Python syntax (``^`` is accepted for powers) over the
variables ``t, x[, y, z]`` (aliases ``x1, x2, x3``) and the constants
``pi`` and ``e``.  Two families are recognised:

* piecewise polynomials: ``+ - *``, division by constants, integer powers,
  ``H(affine)`` and ``piecewise((cond, expr), ...)`` with conditions such as
  ``x < 0`` or ``-1 <= x < 2 and y >= 0``.  These become
  :class:`PiecewiseExpr` and may be mollified;
* closed-form smooth expressions using ``sin cos tan exp log sqrt tanh
  sinh cosh``.  These become :class:`ClosedForm` and are used as they are.

Mixing the two families in one expression is rejected.  A field may be a
nested list of expressions (vector or matrix).
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, SpecError
from .piecewise import PiecewiseExpr, Poly, Region, heaviside, var_names

ELEMENTARY = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
PIECEWISE_FUNCS = {"H", "piecewise"}
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass
class ClosedForm:
    """Smooth closed-form field ``(t, x) -> value``."""

    text: str
    n: int
    func: object
    uses_t: bool

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        out = self.func(t, x)
        return np.broadcast_to(np.asarray(out, dtype=float), (x.shape[0],)).copy()


def _var_index(name, n):
    names = var_names(n)
    if name in names:
        return names.index(name)
    if name.startswith("x") and name[1:].isdigit():
        k = int(name[1:])
        if 1 <= k <= n:
            return k
    return None


class _Fail(Exception):
    def __init__(self, msg, node):
        super().__init__(msg)
        self.node = node


def _calls(tree):
    return {
        node.func.id
        for node in ast.walk(tree)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
    }


class _PiecewiseBuilder:
    def __init__(self, n, box, extension):
        self.n = n
        self.box = box
        self.extension = extension

    def const(self, c):
        return PiecewiseExpr.constant(self.n, self.box, c, self.extension)

    def build(self, node):
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return self.const(float(node.value))
        if isinstance(node, ast.Name):
            if node.id in CONSTANTS:
                return self.const(CONSTANTS[node.id])
            v = _var_index(node.id, self.n)
            if v is None:
                raise _Fail(f"unknown name {node.id!r}", node)
            return PiecewiseExpr.from_poly(self.n, self.box, Poly.var(self.n + 1, v), self.extension)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = self.build(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp):
            left = self.build(node.left)
            if isinstance(node.op, ast.Pow):
                k = self.number(node.right)
                if k != int(k) or k < 0:
                    raise _Fail("powers of piecewise expressions must be non-negative integers", node.right)
                return left ** int(k)
            right = self.build(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if not right.is_constant():
                    raise _Fail("division is only allowed by constants in piecewise expressions", node.right)
                d = right.pieces[0][1].constant_value()
                if d == 0.0:
                    raise _Fail("division by zero", node.right)
                return left.scale(1.0 / d)
            raise _Fail(f"unsupported operator {type(node.op).__name__}", node)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id == "H":
                return self.heaviside(node)
            if node.func.id == "piecewise":
                return self.piecewise(node)
            raise _Fail(f"unknown function {node.func.id!r}", node)
        raise _Fail(f"unsupported syntax {type(node).__name__}", node)

    def number(self, node):
        val = self.build(node)
        if not val.is_constant():
            raise _Fail("expected a constant", node)
        return val.pieces[0][1].constant_value()

    def check_bound(self, v, c, node):
        lo, hi = self.box[v]
        if not (lo <= c <= hi):
            name = var_names(self.n)[v]
            raise _Fail(f"breakpoint {name} = {c:g} lies outside the coefficient box [{lo:g}, {hi:g}]", node)

    def heaviside(self, node):
        if len(node.args) != 1 or node.keywords:
            raise _Fail("H takes exactly one argument", node)
        arg = self.build(node.args[0])
        if len(arg.pieces) != 1 or arg.max_degree > 1:
            raise _Fail("H argument must be affine in a single variable", node.args[0])
        poly = arg.pieces[0][1]
        linear = [(e.index(1), c) for e, c in poly.terms.items() if sum(e) == 1]
        if len(linear) != 1:
            raise _Fail("H argument must be affine in a single variable", node.args[0])
        v, slope = linear[0]
        offset = poly.constant_value()
        self.check_bound(v, -offset / slope, node)
        return heaviside(self.n, self.box, v, -offset / slope, sign=math.copysign(1.0, slope), extension=self.extension)

    def piecewise(self, node):
        if not node.args or node.keywords:
            raise _Fail("piecewise needs at least one (condition, expression) pair", node)
        pieces = []
        for k, pair in enumerate(node.args):
            if not (isinstance(pair, ast.Tuple) and len(pair.elts) == 2):
                raise _Fail(f"piecewise argument {k} must be a (condition, expression) pair", pair)
            region = self.condition(pair.elts[0])
            value = self.build(pair.elts[1])
            if len(value.pieces) != 1:
                raise _Fail(f"piecewise region {k}: value must be a polynomial", pair.elts[1])
            pieces.append((region, value.pieces[0][1]))
        try:
            return PiecewiseExpr(self.n, self.box, pieces, self.extension)
        except ConfigurationError as exc:
            raise _Fail(str(exc), node) from None

    def condition(self, node):
        nvars = self.n + 1
        region = Region.everywhere(nvars)
        if isinstance(node, ast.BoolOp) and isinstance(node.op, ast.And):
            for part in node.values:
                region = region.intersect(self.condition(part)) if region is not None else None
                if region is None:
                    raise _Fail("empty region", node)
            return region
        if not isinstance(node, ast.Compare):
            raise _Fail("conditions must be comparisons joined by 'and'", node)
        operands = [node.left] + list(node.comparators)
        for op, a, b in zip(node.ops, operands[:-1], operands[1:]):
            lo = np.full(nvars, -np.inf)
            hi = np.full(nvars, np.inf)
            va = _var_index(a.id, self.n) if isinstance(a, ast.Name) else None
            vb = _var_index(b.id, self.n) if isinstance(b, ast.Name) else None
            if va is not None and vb is None:
                v, c, var_left = va, self.number(b), True
            elif vb is not None and va is None:
                v, c, var_left = vb, self.number(a), False
            else:
                raise _Fail("each comparison needs one variable and one constant", node)
            self.check_bound(v, c, node)
            upper = isinstance(op, (ast.Lt, ast.LtE)) == var_left
            if not isinstance(op, (ast.Lt, ast.LtE, ast.Gt, ast.GtE)):
                raise _Fail("only <, <=, >, >= are allowed in conditions", node)
            if upper:
                hi[v] = c
            else:
                lo[v] = c
            try:
                part = Region(lo, hi)
            except ConfigurationError:
                raise _Fail("empty region", node) from None
            region = region.intersect(part)
            if region is None:
                raise _Fail("empty region", node)
        return region


class _ClosedBuilder:
    BINOPS = {
        ast.Add: np.add,
        ast.Sub: np.subtract,
        ast.Mult: np.multiply,
        ast.Div: np.divide,
        ast.Pow: np.power,
    }

    def __init__(self, n):
        self.n = n
        self.uses_t = False

    def build(self, node):
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            c = float(node.value)
            return lambda t, x: c
        if isinstance(node, ast.Name):
            if node.id in CONSTANTS:
                c = CONSTANTS[node.id]
                return lambda t, x: c
            v = _var_index(node.id, self.n)
            if v is None:
                raise _Fail(f"unknown name {node.id!r}", node)
            if v == 0:
                self.uses_t = True
                return lambda t, x: t
            return lambda t, x: x[:, v - 1]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = self.build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda t, x: -f(t, x)
            return f
        if isinstance(node, ast.BinOp) and type(node.op) in self.BINOPS:
            op = self.BINOPS[type(node.op)]
            fa, fb = self.build(node.left), self.build(node.right)
            return lambda t, x: op(fa(t, x), fb(t, x))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ELEMENTARY:
            if len(node.args) != 1 or node.keywords:
                raise _Fail(f"{node.func.id} takes exactly one argument", node)
            fn = ELEMENTARY[node.func.id]
            fa = self.build(node.args[0])
            return lambda t, x: fn(fa(t, x))
        raise _Fail(f"unsupported syntax {ast.dump(node)[:40]}", node)


def _parse_tree(text, line=None, col=0):
    src = text.replace("^", "**")
    try:
        return ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"syntax error in {text!r}: {exc.msg}", line, (exc.offset or 0) + col) from None


def _build_scalar(node, text, n, box, extension, line, col):
    calls = _calls(node)
    try:
        if calls & set(ELEMENTARY):
            if calls & PIECEWISE_FUNCS:
                raise _Fail("cannot mix H/piecewise with elementary functions", node)
            builder = _ClosedBuilder(n)
            func = builder.build(node)
            return ClosedForm(ast.unparse(node), n, func, builder.uses_t)
        return _PiecewiseBuilder(n, box, extension).build(node)
    except _Fail as exc:
        c = getattr(exc.node, "col_offset", 0)
        raise SpecError(f"{exc} (in {text.strip()!r})", line, c + col + 1) from None
    except ConfigurationError as exc:
        raise SpecError(f"{exc} (in {text.strip()!r})", line, col + 1) from None


def parse_expression(text, n, box, extension=True, line=None, col=0):
    """Parse a scalar expression into a :class:`PiecewiseExpr` or :class:`ClosedForm`."""
    tree = _parse_tree(text, line, col)
    return _build_scalar(tree.body, text, n, box, extension, line, col)


def parse_field(text, n, box, extension=True, line=None, col=0):
    """Parse a scalar, vector (``[e1, e2]``) or matrix (``[[..],[..]]``) field.

    Returns ``(shape, entries)`` with entries flattened in row-major order.
    """
    tree = _parse_tree(text, line, col)
    body = tree.body

    def walk(node):
        if isinstance(node, (ast.List, ast.Tuple)):
            rows = [walk(e) for e in node.elts]
            shapes = {s for s, _ in rows}
            if len(shapes) != 1:
                raise SpecError(f"ragged nested list in {text!r}", line, col + node.col_offset + 1)
            inner = shapes.pop()
            return (len(rows),) + inner, [e for _, es in rows for e in es]
        return (), [_build_scalar(node, text, n, box, extension, line, col)]

    return walk(body)
