"""``gfwave`` command line: transform, solve, sweep, verify, equivalence, gt-pipeline, example."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .. import asymptotics as asy
from ..errors import (
    ConfigurationError,
    DomainError,
    GfwaveError,
    NotSPDError,
    ShapeError,
    SolverError,
    SpecError,
    StructureError,
)
from ..genfunc.norms import SampledField, write_table
from ..solver import equivalence_check, make_grid, solve_system, solve_wave
from ..transform import system_to_wave, wave_to_system
from .builtins import BUILTINS
from .spec import build_problem, exact_solution, mollifier_for, parse_spec, raw_metric

EXIT_PASS, EXIT_FAIL, EXIT_BLOWUP, EXIT_INPUT = 0, 1, 2, 3
OUT_ENV = "GFWAVE_OUT"
DEFAULT_OUT = "gfwave-out"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, asy.SweepReport):
        return obj.summary()
    return str(obj)


class Run:
    """Collects outputs of one invocation and writes ``report.json``."""

    def __init__(self, command, args, spec):
        self.command = command
        self.out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        self.report = {"command": command, "spec": args.spec, "seed": _seed(args, spec), "files": []}
        self.started = time.perf_counter()

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        self.report["files"].append(name)
        return self.out / name

    def finish(self, verdict, code):
        self.report["verdict"] = verdict
        self.report["exit_code"] = code
        self.report["seconds"] = round(time.perf_counter() - self.started, 3)
        with open(self.path("report.json"), "w") as fh:
            json.dump(self.report, fh, indent=2, default=_json_default, sort_keys=True)
            fh.write("\n")
        print(f"{self.command}: {verdict} (report in {self.out / 'report.json'})")
        return code


def load_spec(source):
    if source in BUILTINS:
        return parse_spec(BUILTINS[source])
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {source!r}: {exc.strerror}") from None
    return parse_spec(text)


def _eps(args, spec):
    if args.eps is not None:
        return args.eps
    return spec.number("run", "eps", 0.0625)


def _seed(args, spec):
    return args.seed if args.seed is not None else spec.number("solver", "seed", 42, int)


def _sweep_config(spec, args):
    return asy.SweepConfig(eps=spec.eps_grid(), K=spec.compacts(), R_ext=spec.number("sweep", "R_ext", None),
                           resolution=spec.number("sweep", "resolution", 201, int))


def _uniform_field(net, eps, box, resolution, name, t=0.0):
    axes = [np.linspace(lo, hi, resolution) for lo, hi in np.asarray(box)]
    return SampledField(axes, net.sample_grid(eps, t, axes), None, {"t": t, "eps": eps, "name": name})


# -- subcommands -----------------------------------------------------------------------------

def cmd_example(args):
    text = BUILTINS[args.name]
    if args.write:
        Path(args.write).write_text(text)
        print(f"wrote {args.write}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_transform(args):
    spec = load_spec(args.spec)
    run = Run("transform", args, spec)
    p = build_problem(spec, args.mollifier)
    eps = _eps(args, spec)
    s = wave_to_system(p)
    axes = [np.linspace(lo, hi, args.resolution) for lo, hi in p.box]
    mesh = np.column_stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
    checked = p.validate(eps, 0.0, mesh)
    named = {f"A{i + 1}": Ai for i, Ai in enumerate(s.A)}
    named.update(B=s.B, F=s.F, w0=s.w0)
    for name, net in named.items():
        with open(run.path(f"system_{name}.tbl"), "w") as fh:
            write_table(fh, _uniform_field(net, eps, p.box, args.resolution, name))
    back = system_to_wave(s)
    run.report.update(eps=eps, size=s.size, points_validated=checked,
                      round_trip={k: v for k, v in back.notes.items() if isinstance(v, (int, float))})
    return run.finish("pass", EXIT_PASS)


def cmd_solve(args):
    spec = load_spec(args.spec)
    run = Run("solve", args, spec)
    p = build_problem(spec, args.mollifier)
    eps = _eps(args, spec)
    h = args.h or spec.number("solver", "h", 0.02)
    seed = _seed(args, spec)
    grid = make_grid(p, h, eps, boundary=spec.get("solver", "boundary", "periodic"),
                     cfl=spec.number("solver", "cfl", 0.45), seed=seed)
    if args.form == "system":
        sol = solve_system(wave_to_system(p), grid, eps)
    else:
        sol = solve_wave(p, grid, eps)
    field = SampledField(grid.axes, sol.u_final, None, {"t": grid.T, "eps": eps, "form": args.form})
    with open(run.path("solution.tbl"), "w") as fh:
        write_table(fh, field)
    run.report.update(eps=eps, grid=grid.describe(), residual=sol.residual,
                      max_abs_u=float(np.max(np.abs(sol.u_final))))
    exact = exact_solution(spec)
    if exact is not None:
        pts = np.column_stack([m.ravel() for m in np.meshgrid(*grid.axes, indexing="ij")])
        err = sol.u_final - np.asarray(exact(grid.T, pts)).reshape(grid.shape)
        run.report["max_error"] = float(np.max(np.abs(err)))
    return run.finish("pass", EXIT_PASS)


def cmd_sweep(args):
    spec = load_spec(args.spec)
    run = Run("sweep", args, spec)
    p = build_problem(spec, args.mollifier)
    cfg = _sweep_config(spec, args)
    s = wave_to_system(p)
    nets = {"R": p.R, "S": s.notes["S"], "S_inv": s.notes["S_inv"], "a": p.a, "b": p.b, "c": p.c, "g": p.g,
            "dS": asy.spacetime_derivatives(s.notes["S"]), "dg": asy.spatial_derivatives(p.g)}
    reports = [asy.classify_net(net, cfg, p.box, p.T, label=name) for name, net in nets.items()]
    rows = [(e, f"{r.label}:{kind}", K, v) for r in reports for e, kind, K, v in r.rows()]
    results = {r.label: r.summary() for r in reports}
    if args.solution:
        sol = asy.solution_moderateness(p, args.h or spec.number("solver", "h", 0.02), cfg,
                                        boundary=spec.get("solver", "boundary", "extend"),
                                        cfl=spec.number("solver", "cfl", 0.45), seed=_seed(args, spec))
        rows += [(e, f"solution:{kind}", K, v) for e, kind, K, v in sol.rows()]
        results["solution"] = sol.summary()
    asy.write_csv(run.path("sweep.csv"), rows)
    run.report["results"] = results
    return run.finish("pass", EXIT_PASS)


def cmd_verify(args):
    spec = load_spec(args.spec)
    run = Run("verify", args, spec)
    p = build_problem(spec, args.mollifier)
    cfg = _sweep_config(spec, args)
    case = (args.case or spec.get("run", "case", "A")).upper()
    if args.form == "system":
        rep = asy.verify_system_conditions(wave_to_system(p), case, cfg)
    else:
        rep = asy.verify_wave_conditions(p, case, cfg)
    asy.write_csv(run.path("verify.csv"), rep.rows())
    run.report.update(rep.summary())
    for h in rep.hypotheses:
        print(f"  {h.name:12s} requires {h.requirement:9s} {'pass' if h.passed else 'FAIL'}"
              + (f"  [{h.report.tag}]" if h.report is not None else ""))
    return run.finish("pass" if rep.passed else "fail", EXIT_PASS if rep.passed else EXIT_FAIL)


def cmd_equivalence(args):
    spec = load_spec(args.spec)
    run = Run("equivalence", args, spec)
    p = build_problem(spec, args.mollifier)
    eps = _eps(args, spec)
    out = equivalence_check(p, args.h or spec.number("solver", "h", 0.02), eps, spec.refinements(),
                            boundary=spec.get("solver", "boundary", "periodic"),
                            cfl=spec.number("solver", "cfl", 0.45), seed=_seed(args, spec),
                            exact=exact_solution(spec))
    orders = out["orders"]
    ok = all(orders.get(k, np.inf) >= args.min_order for k in ("gap_l2", "z_relation_l2"))
    run.report.update(out, min_order=args.min_order)
    for key, val in orders.items():
        print(f"  {key:16s} order {val:.3f}")
    return run.finish("pass" if ok else "fail", EXIT_PASS if ok else EXIT_FAIL)


def cmd_gt_pipeline(args):
    spec = load_spec(args.spec)
    run = Run("gt-pipeline", args, spec)
    R, g = raw_metric(spec)
    cfg = _sweep_config(spec, args)
    built = build_problem(spec, args.mollifier)
    m = mollifier_for(spec, "R", args.mollifier)
    p, rep = asy.geroch_traschen_pipeline(R, g, spec.dimension, spec.box, spec.T, cfg, m, built.u0, built.u1)
    rows = rep.rows()
    run.report.update(rep.summary(), raw_metric=p.notes["raw_metric"], mollifier=m.mode)
    ok = rep.passed
    if args.solution:
        sol = asy.solution_moderateness(p, args.h or spec.number("solver", "h", 0.02), cfg,
                                        boundary=spec.get("solver", "boundary", "extend"),
                                        cfl=spec.number("solver", "cfl", 0.45), seed=_seed(args, spec))
        rows += [(e, f"solution:{kind}", K, v) for e, kind, K, v in sol.rows()]
        run.report["solution"] = sol.summary()
        ok = ok and sol.classification in (asy.BOUNDED, asy.LOG_TYPE, asy.NEGLIGIBLE)
    asy.write_csv(run.path("gt_pipeline.csv"), rows)
    for h in rep.hypotheses:
        print(f"  {h.name:12s} requires {h.requirement:9s} {'pass' if h.passed else 'FAIL'}"
              + (f"  [{h.report.tag}]" if h.report is not None else ""))
    return run.finish("pass" if ok else "fail", EXIT_PASS if ok else EXIT_FAIL)


# -- entry point -----------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="gfwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, solver=False):
        sp.add_argument("spec", help="spec file or built-in name (" + ", ".join(sorted(BUILTINS)) + ")")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--mollifier", choices=("model", "log"), help="override every mollifier mode")
        sp.add_argument("--eps", type=float, help="regularisation parameter (default run.eps)")
        sp.add_argument("--seed", type=int, help="seed for the CFL direction sampling")
        if solver:
            sp.add_argument("--h", type=float, help="grid spacing (default solver.h)")

    sp = sub.add_parser("example", help="print a built-in spec")
    sp.add_argument("name", choices=sorted(BUILTINS))
    sp.add_argument("--write", metavar="PATH", help="write to PATH instead of stdout")
    sp.set_defaults(func=cmd_example)

    sp = sub.add_parser("transform", help="build the first-order system and tabulate its coefficients")
    common(sp)
    sp.add_argument("--resolution", type=int, default=101)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("solve", help="solve one member of the net on a grid")
    common(sp, solver=True)
    sp.add_argument("--form", choices=("system", "wave"), default="system")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="classify the coefficient nets over the eps grid")
    common(sp, solver=True)
    sp.add_argument("--solution", action="store_true", help="also sweep the solution")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="check the existence hypotheses")
    common(sp)
    sp.add_argument("--case", choices=("A", "B", "C", "a", "b", "c"))
    sp.add_argument("--form", choices=("wave", "system"), default="wave")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("equivalence", help="compare the system and wave solvers under refinement")
    common(sp, solver=True)
    sp.add_argument("--min-order", type=float, default=1.9)
    sp.set_defaults(func=cmd_equivalence)

    sp = sub.add_parser("gt-pipeline", help="mollify a raw metric and verify the case-A hypotheses")
    common(sp, solver=True)
    sp.add_argument("--solution", action="store_true", help="also sweep the solution")
    sp.set_defaults(func=cmd_gt_pipeline)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except NotSPDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL if args.command in ("verify", "gt-pipeline") else EXIT_INPUT
    except SpecError as exc:
        print(f"error: {args.spec if hasattr(args, 'spec') else ''}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigurationError, DomainError, ShapeError, StructureError, GfwaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
