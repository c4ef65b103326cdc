"""Problem-spec files: an INI-like text format with strict keys and source positions.

Example::

    [problem]
    kind = wave
    dimension = 1
    box = [[-3, 3]]
    T = 1

    [coefficients]
    R = [[1 + H(x)]]

    [initial]
    u0 = exp(-((x + 0.5)/0.15)^2)

Everything after ``#`` on a line is a comment.  Unknown sections or keys are
rejected; every error carries the line and column it refers to.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, SpecError
from ..genfunc.expr import parse_field
from ..genfunc.mollifier import Mollifier
from ..genfunc.nets import as_spd, constant_net, derived_net, expr_net, gradient, stack_nets
from ..genfunc.piecewise import PiecewiseExpr
from ..transform import WaveProblem

WAVE_COEFFS = ("R", "g", "a", "b", "c", "f")
ACOUSTIC_COEFFS = ("c", "rho", "f")

SCHEMA = {
    "problem": {"kind", "dimension", "box", "T", "coefficient_box"},
    "coefficients": set(WAVE_COEFFS) | {"rho"},
    "initial": {"u0", "u1"},
    "mollifier": {"mode", "radius", "nodes", "panels"} | set(WAVE_COEFFS) | {"rho", "u0", "u1"},
    "sweep": {"exponents", "eps", "K", "R_ext", "resolution"},
    "solver": {"h", "cfl", "boundary", "refine", "seed"},
    "run": {"case", "eps", "exact"},
}
REQUIRED = {"problem": ("dimension", "box", "T"), "initial": ("u0",)}
SECTION_ORDER = tuple(SCHEMA)


@dataclass
class Entry:
    value: str
    line: int | None = None
    col: int | None = None


@dataclass
class ProblemSpec:
    """Parsed spec: ``sections[name][key] -> Entry``.  Equality ignores positions."""

    sections: dict = field(default_factory=dict)

    def get(self, section, key, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry.value

    def entry(self, section, key):
        return self.sections.get(section, {}).get(key)

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = Entry(str(value))

    def values(self):
        return {s: {k: e.value for k, e in keys.items()} for s, keys in self.sections.items() if keys}

    def __eq__(self, other):
        return isinstance(other, ProblemSpec) and self.values() == other.values()

    # -- typed accessors -----------------------------------------------------------
    @property
    def kind(self):
        return self.get("problem", "kind", "wave")

    @property
    def dimension(self):
        return int(self.get("problem", "dimension"))

    @property
    def box(self):
        return _literal_array(self, "problem", "box").reshape(self.dimension, 2)

    @property
    def coefficient_box(self):
        if self.entry("problem", "coefficient_box") is None:
            return self.box
        return _literal_array(self, "problem", "coefficient_box").reshape(self.dimension, 2)

    @property
    def T(self):
        return float(self.get("problem", "T"))

    def number(self, section, key, default, cast=float):
        entry = self.entry(section, key)
        if entry is None:
            return default
        try:
            return cast(_literal(entry))
        except (TypeError, ValueError):
            raise SpecError(f"{section}.{key} must be a number, got {entry.value!r}", entry.line, entry.col) from None

    def eps_grid(self):
        if self.entry("sweep", "eps") is not None:
            return _literal_array(self, "sweep", "eps").ravel()
        text = self.get("sweep", "exponents", "4..14")
        entry = self.entry("sweep", "exponents")
        try:
            lo, hi = (int(v) for v in text.split(".."))
        except ValueError:
            raise SpecError(f"sweep.exponents must read 'k1..k2', got {text!r}",
                            entry.line if entry else None, entry.col if entry else None) from None
        return 2.0 ** -np.arange(lo, hi + 1)

    def compacts(self):
        if self.entry("sweep", "K") is None:
            return None
        arr = _literal_array(self, "sweep", "K")
        return [k.reshape(self.dimension, 2) for k in arr.reshape(-1, self.dimension, 2)]

    def refinements(self):
        text = self.get("solver", "refine", "1, 2, 4")
        return tuple(int(v) for v in text.replace(",", " ").split())


def _literal(entry):
    try:
        return ast.literal_eval(entry.value)
    except (ValueError, SyntaxError):
        raise SpecError(f"expected a literal, got {entry.value!r}", entry.line, entry.col) from None


def _literal_array(spec, section, key):
    entry = spec.entry(section, key)
    if entry is None:
        raise SpecError(f"missing key {section}.{key}")
    try:
        return np.asarray(_literal(entry), dtype=float)
    except (TypeError, ValueError):
        raise SpecError(f"{section}.{key} must be numeric, got {entry.value!r}", entry.line, entry.col) from None


def parse_spec(text: str) -> ProblemSpec:
    """Parse and validate spec text (strict keys, required keys, expression syntax)."""
    spec = ProblemSpec()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise SpecError("unterminated section header", lineno, indent + 1)
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise SpecError(f"unknown section [{section}]; expected one of {', '.join(SECTION_ORDER)}",
                                lineno, indent + 1)
            if section in spec.sections:
                raise SpecError(f"duplicate section [{section}]", lineno, indent + 1)
            spec.sections[section] = {}
            continue
        if "=" not in stripped:
            raise SpecError("expected 'key = value'", lineno, indent + 1)
        if section is None:
            raise SpecError("key outside of any section", lineno, indent + 1)
        key, value = stripped.split("=", 1)
        key = key.strip()
        vcol = line.index("=") + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if key not in SCHEMA[section]:
            raise SpecError(f"unknown key {key!r} in [{section}]", lineno, indent + 1)
        if key in spec.sections[section]:
            raise SpecError(f"duplicate key {key!r} in [{section}]", lineno, indent + 1)
        if not value:
            raise SpecError(f"empty value for {key!r}", lineno, vcol)
        spec.sections[section][key] = Entry(value, lineno, vcol)
    validate_spec(spec)
    return spec


def validate_spec(spec: ProblemSpec):
    missing = [f"{s}.{k}" for s, keys in REQUIRED.items() for k in keys if spec.entry(s, k) is None]
    if spec.kind == "wave" and spec.entry("coefficients", "R") is None:
        missing.append("coefficients.R")
    if spec.kind == "acoustic" and spec.entry("coefficients", "c") is None:
        missing.append("coefficients.c")
    if missing:
        raise SpecError("missing required keys: " + ", ".join(missing))
    kind_entry = spec.entry("problem", "kind")
    if spec.kind not in ("wave", "acoustic"):
        raise SpecError(f"problem.kind must be 'wave' or 'acoustic', got {spec.kind!r}", kind_entry.line, kind_entry.col)
    dim = spec.number("problem", "dimension", None, int)
    if dim not in (1, 2, 3):
        e = spec.entry("problem", "dimension")
        raise SpecError("dimension must be 1, 2 or 3", e.line, e.col)
    for key in ("box", "coefficient_box"):
        if spec.entry("problem", key) is None:
            continue
        arr = _literal_array(spec, "problem", key)
        e = spec.entry("problem", key)
        if arr.size != 2 * dim or np.any(arr.reshape(dim, 2)[:, 0] >= arr.reshape(dim, 2)[:, 1]):
            raise SpecError(f"problem.{key} must be {dim} increasing [lo, hi] pairs", e.line, e.col)
    if spec.T <= 0:
        e = spec.entry("problem", "T")
        raise SpecError("T must be positive", e.line, e.col)
    allowed = ACOUSTIC_COEFFS if spec.kind == "acoustic" else WAVE_COEFFS
    for key, entry in spec.sections.get("coefficients", {}).items():
        if key not in allowed:
            raise SpecError(f"coefficient {key!r} is not used by kind {spec.kind!r}", entry.line, entry.col)
    for mkey, entry in spec.sections.get("mollifier", {}).items():
        if mkey in ("mode",) + tuple(SCHEMA["coefficients"]) + ("u0", "u1") and entry.value not in ("model", "log"):
            raise SpecError(f"mollifier {mkey} must be 'model' or 'log'", entry.line, entry.col)
    boundary = spec.get("solver", "boundary", "periodic")
    if boundary not in ("periodic", "extend"):
        e = spec.entry("solver", "boundary")
        raise SpecError("solver.boundary must be 'periodic' or 'extend'", e.line, e.col)
    case = spec.get("run", "case", "A")
    if case.upper() not in ("A", "B", "C"):
        e = spec.entry("run", "case")
        raise SpecError("run.case must be A, B or C", e.line, e.col)
    # parse every expression now so that errors point at the source
    parsed_fields(spec)
    spec.eps_grid()
    spec.compacts()
    return spec


_SHAPES = {"R": "matrix", "g": "vector", "b": "vector"}


def _expected_shape(key, n):
    kind = _SHAPES.get(key)
    if kind == "matrix":
        return (n, n)
    if kind == "vector":
        return (n,)
    return ()


def parsed_fields(spec: ProblemSpec):
    """Parse every coefficient and initial-data expression: ``{key: (shape, entries)}``."""
    n = spec.dimension
    cbox = spec.coefficient_box
    box = np.vstack([[0.0, spec.T], cbox])
    out = {}
    items = list(spec.sections.get("coefficients", {}).items()) + list(spec.sections.get("initial", {}).items())
    for key, entry in items:
        shape, entries = parse_field(entry.value, n, box, True, entry.line, entry.col - 1)
        want = _expected_shape(key, n) if spec.kind == "wave" else ()
        if shape == () and want != ():
            # a scalar for a vector/matrix coefficient means a constant multiple of ones / identity
            if isinstance(entries[0], PiecewiseExpr) and entries[0].is_constant():
                shape, entries = want, _broadcast(entries[0], want)
            else:
                raise SpecError(f"{key} must have shape {want}", entry.line, entry.col)
        elif shape != want:
            raise SpecError(f"{key} has shape {shape}, expected {want}", entry.line, entry.col)
        out[key] = (shape, entries)
    return out


def _broadcast(value, shape):
    if len(shape) == 1:
        return [value] * shape[0]
    n = shape[0]
    return [value if i == j else value * 0.0 for i in range(n) for j in range(n)]


def serialize_spec(spec: ProblemSpec) -> str:
    lines = []
    for section in SECTION_ORDER:
        keys = spec.sections.get(section)
        if not keys:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, entry in keys.items():
            lines.append(f"{key} = {entry.value}")
    return "\n".join(lines) + "\n"


# -- building problems -------------------------------------------------------------------

def mollifier_for(spec: ProblemSpec, key, override=None):
    mode = override or spec.get("mollifier", key) or spec.get("mollifier", "mode", "model")
    return Mollifier(
        mode,
        radius=spec.number("mollifier", "radius", 1.0),
        nodes=spec.number("mollifier", "nodes", 32, int),
        panels=spec.number("mollifier", "panels", 4, int),
    )


def _field_net(spec, key, parsed, override):
    shape, entries = parsed[key]
    m = mollifier_for(spec, key, override)
    nets = [expr_net(e, m) for e in entries]
    if shape == ():
        net = nets[0]
        net.label = key
        return net
    return stack_nets(nets, shape, label=key)


def build_problem(spec: ProblemSpec, mollifier_override=None) -> WaveProblem:
    """Materialise the spec as a :class:`WaveProblem` of nets."""
    n = spec.dimension
    parsed = parsed_fields(spec)
    zero = constant_net(0.0, n, label="0")

    def get(key, default):
        return _field_net(spec, key, parsed, mollifier_override) if key in parsed else default

    u0 = get("u0", zero)
    u1 = get("u1", zero)
    f = get("f", zero)
    if spec.kind == "acoustic":
        c = get("c", None)
        rho = get("rho", constant_net(1.0, n))
        c2 = c * c
        R = as_spd(derived_net(n, (n, n), lambda eps, t, x: c2(eps, t, x)[:, None, None] * np.eye(n), [c2], label="c^2 I"))
        drho = gradient(rho)
        b = derived_net(n, (n,), lambda eps, t, x: -(c2(eps, t, x) / rho(eps, t, x))[:, None] * drho(eps, t, x),
                        [c2, rho, drho], label="-c^2 grad(rho)/rho")
        g = constant_net(np.zeros(n), n, label="0")
        return WaveProblem(n, R, g, zero, b, zero, f, u0, u1, spec.box, spec.T, {"kind": "acoustic"})
    R = get("R", None)
    g = get("g", constant_net(np.zeros(n), n, label="0"))
    b = get("b", constant_net(np.zeros(n), n, label="0"))
    return WaveProblem(n, R, g, get("a", zero), b, get("c", zero), f, u0, u1, spec.box, spec.T, {"kind": "wave"})


def exact_solution(spec: ProblemSpec):
    """Closed-form ``u(t, x)`` from ``run.exact`` (or None)."""
    entry = spec.entry("run", "exact")
    if entry is None:
        return None
    n = spec.dimension
    box = np.vstack([[0.0, spec.T], spec.box])
    shape, entries = parse_field(entry.value, n, box, True, entry.line, entry.col - 1)
    if shape != ():
        raise SpecError("run.exact must be a scalar expression", entry.line, entry.col)
    expr = entries[0]
    return lambda t, x: expr(np.full(np.asarray(x).reshape(-1, n).shape[0], t), x)


def raw_metric(spec: ProblemSpec):
    """Raw parsed R (row-major) and g entries for the metric pipeline."""
    parsed = parsed_fields(spec)
    if spec.kind == "acoustic":
        raise ConfigurationError("the metric pipeline takes a wave-kind spec with R (and optionally g)")
    g = parsed["g"][1] if "g" in parsed else []
    return parsed["R"][1], g
