"""ε-sweeps: growth-exponent fits, asymptotic classification and hypothesis checks.

A net is swept over a geometric ε grid, one norm value per ε, and the
values are fitted two ways:

* power law ``v ~ C eps^-p`` (least squares of ``log v`` against ``L = log(1/eps)``);
* log law ``v ~ q L + c`` (least squares of ``v`` against ``L``).

Classification (first matching rule wins):

1. any non-finite value                         -> ``divergent-power``
2. all values below ``negligible_floor``         -> ``negligible``
3. ``p <= -1``                                   -> ``negligible`` (order ``m = -p``)
4. ``|p| <= 0.1`` and max/min < 2, or ``-1 < p < -0.1`` -> ``O(1)``
5. log-law residual below power-law residual and ``q`` stable -> ``log-type``
6. otherwise                                     -> ``moderate`` with ``N = ceil(p + 0.1)``

Both residuals are measured on ``log v`` so they are comparable.  ``q`` is
stable when the log-law slopes fitted on the first and second halves of the
sweep agree within ``q_stability`` (relative).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import BlowUpError, ConfigurationError, GfwaveError, NotSPDError
from .genfunc.mollifier import Mollifier
from .genfunc.nets import (
    CoefficientNet,
    as_spd,
    constant_net,
    derived_net,
    expr_net,
    net_arithmetic,
    partial,
    sqrt_spd_net,
    stack_nets,
)
from .genfunc.norms import NormRequest, net_norm
from .genfunc.piecewise import PiecewiseExpr
from .solver import make_grid, solve_system
from .transform import HyperbolicSystem, WaveProblem, wave_to_system

NEGLIGIBLE = "negligible"
BOUNDED = "O(1)"
LOG_TYPE = "log-type"
MODERATE = "moderate"
DIVERGENT = "divergent-power"

_RANK = {NEGLIGIBLE: 0, BOUNDED: 1, LOG_TYPE: 2, MODERATE: 3, DIVERGENT: 5}


def default_eps():
    return 2.0 ** -np.arange(4, 15)


def compact_family(box, fractions=(0.25, 0.5, 0.75)):
    """Nested boxes sharing the centre of ``box`` with half-widths scaled by ``fractions``."""
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    mid, half = box.mean(axis=1), 0.5 * (box[:, 1] - box[:, 0])
    return [np.column_stack([mid - f * half, mid + f * half]) for f in fractions]


@dataclass
class SweepConfig:
    eps: np.ndarray = field(default_factory=default_eps)
    K: list | None = None
    R_ext: float | None = None
    norm: str = "sup"
    resolution: int = 201
    o1_exponent: float = 0.1
    o1_ratio: float = 2.0
    negligible_floor: float = 1e-12
    q_stability: float = 0.25
    moderate_margin: float = 0.1

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        if self.eps.ndim != 1 or len(self.eps) < 6:
            raise ConfigurationError("an ε sweep needs at least 6 points")
        if np.any(np.diff(self.eps) >= 0.0):
            raise ConfigurationError("ε grid must be strictly decreasing")
        if np.any(self.eps <= 0.0) or np.any(self.eps > 1.0):
            raise ConfigurationError("ε values must lie in (0, 1]")
        if self.K is not None:
            self.K = [np.asarray(k, dtype=float).reshape(-1, 2) for k in self.K]

    def compacts(self, box):
        return self.K if self.K is not None else compact_family(box)


@dataclass
class FitResult:
    p: float
    p_band: float
    q: float
    c: float
    power_residual: float
    log_residual: float
    q_head: float
    q_tail: float


def fit_exponent(eps, values):
    """Power-law and log-law fits of per-ε norm values (see module docstring)."""
    eps, values = np.asarray(eps, dtype=float), np.asarray(values, dtype=float)
    if len(eps) < 6:
        raise ConfigurationError("need at least 6 ε points to fit")
    if np.any(~np.isfinite(values)) or np.any(values <= 0.0):
        raise ConfigurationError("fit_exponent needs positive finite values")
    L = np.log(1.0 / eps)
    y = np.log(values)
    A = np.column_stack([L, np.ones_like(L)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    power_res = float(r @ r)
    dof = max(len(L) - 2, 1)
    se = math.sqrt(power_res / dof / float(np.sum((L - L.mean()) ** 2)))
    lcoef, *_ = np.linalg.lstsq(A, values, rcond=None)
    pred = A @ lcoef
    log_res = float(np.sum((y - np.log(pred)) ** 2)) if np.all(pred > 0.0) else math.inf
    half = len(L) // 2
    q_head = float(np.polyfit(L[: half + 1], values[: half + 1], 1)[0])
    q_tail = float(np.polyfit(L[half:], values[half:], 1)[0])
    return FitResult(float(coef[0]), 2.0 * se, float(lcoef[0]), float(lcoef[1]), power_res, log_res, q_head, q_tail)


@dataclass
class SweepReport:
    label: str
    norm_kind: str
    eps: np.ndarray
    values: np.ndarray
    classification: str
    order: float | None = None
    fit: FitResult | None = None
    K_id: int | str = 0
    flagged_eps: list = field(default_factory=list)
    parts: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def tag(self):
        if self.classification == MODERATE:
            return f"moderate({int(self.order)})"
        return self.classification

    def summary(self):
        out = {"label": self.label, "norm": self.norm_kind, "class": self.tag, "K": self.K_id}
        if self.fit is not None:
            out.update(p=self.fit.p, p_band=self.fit.p_band, q=self.fit.q)
        if self.order is not None:
            out["order"] = self.order
        if self.flagged_eps:
            out["flagged_eps"] = list(map(float, self.flagged_eps))
        if self.parts:
            out["parts"] = [p.summary() for p in self.parts]
        out.update({k: v for k, v in self.notes.items() if isinstance(v, (int, float, str, bool))})
        return out

    def rows(self):
        """CSV rows ``(epsilon, norm_kind, K_id, value)`` for this report and its parts."""
        if self.parts:
            return [row for part in self.parts for row in part.rows()]
        return [(float(e), self.norm_kind, self.K_id, float(v)) for e, v in zip(self.eps, self.values)]


def is_log_type(classification):
    return classification in (NEGLIGIBLE, BOUNDED, LOG_TYPE)


def is_bounded(classification):
    return classification in (NEGLIGIBLE, BOUNDED)


def classify_values(eps, values, cfg: SweepConfig | None = None, label="", norm_kind="sup", K_id=0):
    """Apply the classification rules to one per-ε value series."""
    cfg = cfg or SweepConfig(eps=eps)
    eps, values = np.asarray(eps, dtype=float), np.asarray(values, dtype=float)
    rep = SweepReport(label, norm_kind, eps, values, DIVERGENT, K_id=K_id)
    bad = ~np.isfinite(values)
    if np.any(bad):
        rep.flagged_eps = list(eps[bad])
        rep.order = math.inf
        return rep
    if np.all(np.abs(values) < cfg.negligible_floor):
        rep.classification = NEGLIGIBLE
        rep.order = math.inf
        return rep
    safe = np.maximum(np.abs(values), 1e-300)
    fit = fit_exponent(eps, safe)
    rep.fit = fit
    p = fit.p
    ratio = float(np.max(safe) / np.min(safe))
    if p <= -1.0:
        rep.classification, rep.order = NEGLIGIBLE, -p
    elif (abs(p) <= cfg.o1_exponent and ratio < cfg.o1_ratio) or -1.0 < p < -cfg.o1_exponent:
        rep.classification = BOUNDED
    elif fit.log_residual < fit.power_residual and _q_stable(fit, cfg):
        rep.classification = LOG_TYPE
    else:
        rep.classification, rep.order = MODERATE, math.ceil(p + cfg.moderate_margin)
    return rep


def _q_stable(fit, cfg):
    scale = max(abs(fit.q), 1e-300)
    return fit.q > 0.0 and abs(fit.q_head - fit.q_tail) <= cfg.q_stability * scale


def worst(reports, label=""):
    """The report with the weakest class (ties broken by larger moderate order)."""
    def key(r):
        return (_RANK[r.classification], r.order if r.classification == MODERATE else 0)
    pick = max(reports, key=key)
    out = SweepReport(label or pick.label, pick.norm_kind, pick.eps, pick.values, pick.classification,
                      pick.order, pick.fit, pick.K_id, sorted({e for r in reports for e in r.flagged_eps}),
                      list(reports))
    return out


def classify_net(net: CoefficientNet, cfg: SweepConfig, box=None, T=None, norm=None, label=""):
    """Sweep one net over ``cfg.eps`` on every compact set and classify.

    ``norm`` is ``sup`` (space-time sup over ``[0, T] x K``) or ``mixed``;
    default ``cfg.norm``.  Returns the worst per-K report with all per-K
    reports attached as ``parts``.
    """
    norm = norm or cfg.norm
    if cfg.K is None and box is None:
        raise ConfigurationError("classify_net needs compact sets or a box to derive them from")
    Ks = cfg.compacts(box)
    parts = []
    for k, K in enumerate(Ks):
        req = NormRequest(norm, K=K, resolution=cfg.resolution)
        vals = []
        for e in cfg.eps:
            try:
                vals.append(net_norm(net, float(e), req, T=T))
            except NotSPDError:
                raise
            except GfwaveError as exc:
                raise type(exc)(f"evaluation of {label or net.label} failed at eps={e}: {exc}") from None
        parts.append(classify_values(cfg.eps, vals, cfg, label, norm, k))
    return worst(parts, label)


def exterior_report(net, cfg: SweepConfig, R_ext, outer, T=None, label=""):
    """Space-time sup of ``net`` over ``R_ext <= |x|_inf <= outer``, classified across ε."""
    n = net.n
    slabs = []
    for j in range(n):
        for lo, hi in ((R_ext, outer), (-outer, -R_ext)):
            K = np.tile([-outer, outer], (n, 1)).astype(float)
            K[j] = (lo, hi)
            slabs.append(K)
    vals = []
    for e in cfg.eps:
        vals.append(max(net_norm(net, float(e), NormRequest("sup", K=K, resolution=cfg.resolution), T=T)
                        for K in slabs))
    return classify_values(cfg.eps, vals, cfg, label, "sup-exterior", "ext")


# -- hypothesis verification -----------------------------------------------------------

@dataclass
class Hypothesis:
    name: str
    requirement: str  # "log-type" or "O(1)"
    passed: bool
    report: SweepReport | None = None
    note: str = ""

    def summary(self):
        out = {"name": self.name, "requires": self.requirement, "passed": self.passed}
        if self.report is not None:
            out["class"] = self.report.tag
            if self.report.fit is not None:
                out["p"] = self.report.fit.p
                out["q"] = self.report.fit.q
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class ConditionReport:
    case: str
    hypotheses: list
    form: str = "wave"

    @property
    def passed(self):
        return all(h.passed for h in self.hypotheses)

    def failing(self):
        return [h.name for h in self.hypotheses if not h.passed]

    def summary(self):
        return {"case": self.case, "form": self.form, "aggregate": "pass" if self.passed else "fail",
                "failing": self.failing(), "hypotheses": [h.summary() for h in self.hypotheses]}

    def rows(self):
        out = []
        for h in self.hypotheses:
            if h.report is not None:
                out.extend((e, f"{h.name}:{kind}", K, v) for e, kind, K, v in h.report.rows())
        return out


def spacetime_derivatives(net):
    """Stack of ``d/dt`` and ``d/dx_k`` of a net, shape ``(n + 1,) + net.shape``."""
    parts = [partial(net, v) for v in range(net.n + 1)]
    return derived_net(net.n, (net.n + 1,) + net.shape,
                       lambda eps, t, x: np.stack([p(eps, t, x) for p in parts], axis=1), parts,
                       label=f"d({net.label})")


def spatial_derivatives(net):
    parts = [partial(net, v) for v in range(1, net.n + 1)]
    return derived_net(net.n, (net.n,) + net.shape,
                       lambda eps, t, x: np.stack([p(eps, t, x) for p in parts], axis=1), parts,
                       label=f"d_x({net.label})")


_CASE_NORM = {"A": "sup", "B": "mixed", "C": "sup"}


def _case_config(cfg, case, box):
    """Case A: the local compact family.  Cases B and C: the whole box (global)."""
    if case == "A":
        return cfg, cfg.compacts(box)
    if case not in ("B", "C"):
        raise ConfigurationError(f"case must be A, B or C, got {case!r}")
    return cfg, [np.asarray(box, dtype=float)]


def _check(name, net, requirement, cfg, case, box, T):
    _, Ks = _case_config(cfg, case, box)
    sub = SweepConfig(cfg.eps, Ks, cfg.R_ext, _CASE_NORM[case], cfg.resolution, cfg.o1_exponent,
                      cfg.o1_ratio, cfg.negligible_floor, cfg.q_stability, cfg.moderate_margin)
    try:
        rep = classify_net(net, sub, box, T=T, label=name)
    except NotSPDError as exc:
        return Hypothesis(name, requirement, False, None, f"R is not positive definite: {exc}")
    ok = is_log_type(rep.classification) if requirement == LOG_TYPE else is_bounded(rep.classification)
    return Hypothesis(name, requirement, ok, rep)


def _exterior_check(name, net, cfg, box, T):
    R_ext = cfg.R_ext if cfg.R_ext is not None else float(np.max(np.abs(box)))
    outer = R_ext + max(1.0, float(np.max(box[:, 1] - box[:, 0])) / 2.0)
    try:
        rep = exterior_report(net, cfg, R_ext, outer, T=T, label=name)
    except NotSPDError as exc:
        return Hypothesis(name, BOUNDED, False, None, f"R is not positive definite: {exc}")
    return Hypothesis(name, BOUNDED, is_bounded(rep.classification), rep, f"|x| >= {R_ext:g}")


def verify_wave_conditions(p: WaveProblem, case: str, cfg: SweepConfig) -> ConditionReport:
    """Empirical check of the coefficient hypotheses for unique solvability of the wave form.

    Case A: a, c, b, S, dS, S^-1 and g' of local sup-log-type on the compact
    family, plus S and g bounded beyond ``R_ext``.  Case B: the same nets
    with the mixed L1-Linf norm over the whole box.  Case C: global sup.
    """
    case = case.upper()
    _case_config(cfg, case, p.box)
    S = sqrt_spd_net(p.R)
    nets = [
        ("a", p.a), ("c", p.c), ("b", p.b), ("S", S),
        ("dS", spacetime_derivatives(S)),
        ("S_inv", net_arithmetic(S, None, "inverse")),
        ("g'", spatial_derivatives(p.g)),
    ]
    hyps = [_check(name, net, LOG_TYPE, cfg, case, p.box, p.T) for name, net in nets]
    if case == "A":
        hyps.append(_exterior_check("S exterior", S, cfg, p.box, p.T))
        hyps.append(_exterior_check("g exterior", p.g, cfg, p.box, p.T))
    return ConditionReport(case, hyps, "wave")


def verify_system_conditions(s: HyperbolicSystem, case: str, cfg: SweepConfig) -> ConditionReport:
    """Hypotheses for the first-order system: spatial derivatives of each A_i and sym(B) log-type."""
    case = case.upper()
    _case_config(cfg, case, s.box)
    symB = derived_net(s.n, s.B.shape, lambda eps, t, x: 0.5 * (s.B(eps, t, x) + np.swapaxes(s.B(eps, t, x), -1, -2)),
                       [s.B], label="sym(B)")
    hyps = [_check(f"A{i + 1}'", spatial_derivatives(Ai), LOG_TYPE, cfg, case, s.box, s.T)
            for i, Ai in enumerate(s.A)]
    hyps.append(_check("sym(B)", symB, LOG_TYPE, cfg, case, s.box, s.T))
    if case == "A":
        hyps.extend(_exterior_check(f"A{i + 1} exterior", Ai, cfg, s.box, s.T) for i, Ai in enumerate(s.A))
    return ConditionReport(case, hyps, "system")


# -- solution nets -----------------------------------------------------------------------

def _perturbed(net, bump, size):
    """``net + eps^3 * size * bump`` as an ε-dependent net."""
    def func(eps, t, x):
        return net(eps, t, x) + size * eps**3 * bump(x)

    out = derived_net(net.n, (), func, [net], label=f"{net.label}+eps^3")
    out.eps_independent = False
    return out


def _default_bump(box):
    mid = np.asarray(box, dtype=float).mean(axis=1)
    width = 0.1 * float(np.min(np.diff(np.asarray(box, dtype=float), axis=1)))
    return lambda x: np.exp(-np.sum((x - mid) ** 2, axis=1) / (2 * width * width))


def _solution_sups(s, h, eps, Ks, boundary, cfl, seed, reference=None):
    grid = make_grid(s, h, eps, boundary=boundary, cfl=cfl, seed=seed)
    save_every = max(1, grid.steps // 64)
    sol = solve_system(s, grid, eps, save_every=save_every)
    snaps = sol.snapshot_array()
    if reference is not None:
        snaps = snaps - reference
    mag = np.sqrt(np.sum(snaps * snaps, axis=-1))  # (times, grid...)
    out = []
    for K in Ks:
        sel = [np.nonzero((a >= K[j, 0] - 1e-12) & (a <= K[j, 1] + 1e-12))[0] for j, a in enumerate(grid.axes)]
        out.append(float(np.max(mag[np.ix_(np.arange(mag.shape[0]), *sel)])))
    return out, snaps, grid


def solution_moderateness(p: WaveProblem, h, cfg: SweepConfig, boundary="extend", cfl=0.45, seed=42,
                          perturb=True, refine=True, perturbation_size=1.0):
    """Sweep the system solver over ε and classify ``sup_{[0,T] x K} |w_eps|``.

    With ``refine`` the sweep is repeated at ``h/2`` and the shift of the
    fitted exponent is reported (``refinement_shift``).  With ``perturb``
    (u0, u1, f) are perturbed by ``eps^3`` times a fixed bump and the decay
    order of the output discrepancy is fitted: this is stability under a
    planted negligible-type perturbation, evidence and not proof of
    uniqueness.
    """
    s = wave_to_system(p)
    Ks = cfg.compacts(p.box)
    hs = [h, h / 2.0] if refine else [h]
    sweeps = {}
    base_snaps = {}
    for hh in hs:
        per_K = [[] for _ in Ks]
        flagged = []
        for e in cfg.eps:
            try:
                sups, snaps, _ = _solution_sups(s, hh, float(e), Ks, boundary, cfl, seed)
            except BlowUpError:
                sups, snaps = [math.inf] * len(Ks), None
                flagged.append(float(e))
            if hh == h:
                base_snaps[float(e)] = snaps
            for k, v in enumerate(sups):
                per_K[k].append(v)
        parts = [classify_values(cfg.eps, vals, cfg, "solution", "sup", k) for k, vals in enumerate(per_K)]
        sweeps[hh] = worst(parts, "solution")
        sweeps[hh].flagged_eps = flagged
    report = sweeps[h]
    report.notes["h"] = h
    if refine:
        coarse, fine = sweeps[h], sweeps[h / 2.0]
        if coarse.fit is not None and fine.fit is not None:
            report.notes["p_fine"] = fine.fit.p
            report.notes["refinement_shift"] = abs(coarse.fit.p - fine.fit.p)
        report.notes["class_fine"] = fine.tag
    if perturb:
        bump = _default_bump(p.box)
        q = WaveProblem(p.n, p.R, p.g, p.a, p.b, p.c, _perturbed(p.f, bump, perturbation_size),
                        _perturbed(p.u0, bump, perturbation_size), _perturbed(p.u1, bump, perturbation_size),
                        p.box, p.T)
        sq = wave_to_system(q)
        disc = [[] for _ in Ks]
        for e in cfg.eps:
            ref = base_snaps.get(float(e))
            if ref is None:
                for k in range(len(Ks)):
                    disc[k].append(math.inf)
                continue
            sups, _, _ = _solution_sups(sq, h, float(e), Ks, boundary, cfl, seed, reference=ref)
            for k, v in enumerate(sups):
                disc[k].append(v)
        parts = [classify_values(cfg.eps, vals, cfg, "perturbation", "sup", k) for k, vals in enumerate(disc)]
        decay = []
        for part in parts:
            if part.fit is not None:
                decay.append(-part.fit.p)
            elif part.classification == NEGLIGIBLE:
                decay.append(math.inf)
        report.notes["perturbation_decay_order"] = min(decay) if decay else float("nan")
        report.notes["perturbation"] = worst(parts, "perturbation")
    report.parts = report.parts or []
    return report


# -- Geroch-Traschen style pipeline --------------------------------------------------------

def _raw_sample_points(exprs, box, per_axis=41):
    """Grid points over the box, nudged off every breakpoint of the raw data."""
    box = np.asarray(box, dtype=float)
    axes = []
    for j, (lo, hi) in enumerate(box):
        a = np.linspace(lo, hi, per_axis)
        brk = np.unique(np.concatenate([np.asarray(e.breaks[j + 1]) for e in exprs if isinstance(e, PiecewiseExpr)]
                                       or [np.array([])]))
        for b in brk:
            a = a[np.abs(a - b) > 1e-9 * max(1.0, hi - lo)]
        axes.append(a)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def check_raw_metric(R_entries, g_entries, n, box, floor=1e-8, T=0.0):
    """Sample the raw (unmollified) metric: R SPD with bounded inverse and G Lorentzian.

    Raises :class:`ConfigurationError` when the data leaves the bounded,
    boundedly invertible class.
    """
    x = _raw_sample_points(list(R_entries) + list(g_entries), box)
    t = np.full(x.shape[0], T)
    R = np.stack([np.asarray(e(t, x)) for e in R_entries], axis=-1).reshape(-1, n, n)
    g = np.stack([np.asarray(e(t, x)) for e in g_entries], axis=-1).reshape(-1, n) if g_entries else np.zeros((x.shape[0], n))
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(g))):
        raise ConfigurationError("raw metric is not bounded on the box")
    if np.max(np.abs(R - np.swapaxes(R, -1, -2))) > 1e-12 * max(1.0, float(np.max(np.abs(R)))):
        raise ConfigurationError("raw R block is not symmetric")
    lam = linalg.sym_eig(R).values
    if np.min(lam) <= floor:
        k = int(np.argmin(lam[:, 0]))
        raise ConfigurationError(f"raw R block is not uniformly positive definite (min eigenvalue {np.min(lam):.3e} "
                                 f"at x={x[k].tolist()})")
    det = np.prod(lam, axis=-1)
    G = linalg.assemble_metric(g, R)
    for k in range(G.shape[0]):
        if linalg.lorentzian_check(G[k]).verdict != "Lorentzian":
            raise ConfigurationError(f"raw metric is not Lorentzian at x={x[k].tolist()}")
    return {"min_eigenvalue": float(np.min(lam)), "max_eigenvalue": float(np.max(lam)),
            "min_det": float(np.min(det)), "max_inverse_norm": float(np.max(1.0 / lam[:, 0])), "points": int(x.shape[0])}


def geroch_traschen_pipeline(R_entries, g_entries, n, box, T, cfg: SweepConfig, mollifier=None,
                             u0=None, u1=None):
    """Mollify a raw metric, build the wave problem with a = b = c = f = 0, verify case A.

    ``R_entries``/``g_entries`` are parsed scalar expressions (row-major for
    R).  The raw data must be bounded with bounded inverse on the box;
    otherwise :class:`ConfigurationError` is raised.
    """
    m = mollifier or Mollifier("log")
    if len(R_entries) != n * n or (g_entries and len(g_entries) != n):
        raise ConfigurationError("metric entry counts do not match the dimension")
    raw_info = check_raw_metric(R_entries, g_entries, n, box)
    R = as_spd(stack_nets([expr_net(e, m) for e in R_entries], (n, n), label="R"))
    g = stack_nets([expr_net(e, m) for e in g_entries], (n,), label="g") if g_entries else constant_net(np.zeros(n), n)
    zero = constant_net(0.0, n)
    bump = _default_bump(box)
    u0 = u0 if u0 is not None else derived_net(n, (), lambda eps, t, x: bump(x), [zero], label="bump")
    u1 = u1 if u1 is not None else zero
    p = WaveProblem(n, R, g, zero, constant_net(np.zeros(n), n), zero, zero, u0, u1, box, T,
                    {"raw_metric": raw_info, "mollifier": m.mode})
    return p, verify_wave_conditions(p, "A", cfg)


def write_csv(path_or_stream, rows):
    """CSV with columns ``epsilon, norm_kind, K_id, value``; floats with 17 significant digits."""
    own = isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__")
    fh = open(path_or_stream, "w", newline="") if own else path_or_stream
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "norm_kind", "K_id", "value"])
        for e, kind, K, v in rows:
            w.writerow([f"{e:.17g}", kind, K, f"{v:.17g}"])
    finally:
        if own:
            fh.close()
