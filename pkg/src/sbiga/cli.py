"""Command-line interface: ``sbiga {parametrize,solve,convergence,radial}``.

Exit codes: 0 success, 2 usage or schema error, 3 regularity failure,
4 solver failure, 5 spectral defect or ill-conditioned modal matching.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import _accel, domains, io, radial, solver
from .errors import (
    ConditioningError,
    DefectError,
    RegularityError,
    SbigaError,
    SchemaError,
    SolverError,
)
from .geometry import build_sb_map, refine, refine_uniform, validate_regularity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REGULARITY = 3
EXIT_SOLVER = 4
EXIT_SPECTRAL = 5


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, RegularityError):
        return EXIT_REGULARITY
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (DefectError, ConditioningError)):
        return EXIT_SPECTRAL
    return EXIT_USAGE


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _load_geometry(source: str):
    """Built-in tag or path to a geometry document."""
    if source in domains.BUILTIN_TAGS:
        return domains.builtin(source)
    if Path(source).exists():
        return io.read_geometry(source)
    raise SchemaError(f"{source}: neither a built-in tag ({', '.join(domains.BUILTIN_TAGS)}) nor a readable file")


def _prepare(gmap, degree: int | None, levels: int):
    if degree is not None:
        p, q = gmap.degrees
        if degree < max(p, q):
            raise SchemaError(f"--degree {degree} is below the geometry degree {max(p, q)}")
        gmap = refine(gmap, radial_degree=degree, circ_degree=degree)
    return refine_uniform(gmap, levels)


def _write_csv(path: str | None, header: list[str], rows) -> None:
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if path:
            handle.close()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _order(args):
    return None if args.quad_order is None else args.quad_order


def _boundary_function(text: str):
    """``cos:K``, ``sin:K`` (in the boundary parameter s) or ``const:C``."""
    name, _, value = text.partition(":")
    try:
        v = float(value) if value else 1.0
    except ValueError:
        raise SchemaError(f"bad boundary data {text!r}") from None
    if name == "cos":
        return lambda s: np.cos(2 * np.pi * v * s)
    if name == "sin":
        return lambda s: np.sin(2 * np.pi * v * s)
    if name == "const":
        return lambda s: np.full_like(s, v)
    raise SchemaError(f"bad boundary data {text!r}; use cos:K, sin:K or const:C")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_parametrize(args) -> int:
    kind, obj, _ = io.load(args.boundary)
    if kind == "curve":
        if args.center is None:
            raise SchemaError("--center is required for a boundary curve")
        gmap = build_sb_map(obj, args.center)
        degree = args.degree if args.degree is not None else obj.knot_vector.degree
        gmap = refine(gmap, radial_degree=degree)
        tag = "scaled-boundary"
    else:
        gmap = obj
        if args.degree is not None:
            gmap = refine(gmap, radial_degree=args.degree)
        tag = "geometry"
    gmap = refine_uniform(gmap, args.refine)
    report = validate_regularity(gmap, args.grid)
    doc = io.geometry_document(gmap, kind=tag, orientation=args.orientation)
    text = io.dumps(doc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    rep = json.dumps(report.as_dict())
    if args.report:
        Path(args.report).write_text(rep + "\n")
    print(f"regularity {rep}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_REGULARITY


def cmd_solve(args) -> int:
    prob = solver.problem(args.problem)
    gmap = _prepare(_load_geometry(args.geometry), args.degree, args.refine)
    sol = solver.solve_problem(gmap, prob, route=args.assembly, merge_center=args.merge_center, order=_order(args))
    err = solver.l2_error(sol, prob.exact)
    rows = solver.sample_field(sol, args.grid, prob.exact)
    _write_csv(args.output, ["x", "y", "u_h", "u_exact", "abs_error"], rows)
    print(f"dofs={sol.dofmap.n_unknowns} l2_error={err!r} residual={sol.residual!r}", file=sys.stderr)
    return EXIT_OK


def cmd_convergence(args) -> int:
    if args.levels < 2:
        raise SchemaError("--levels must be at least 2")
    prob = solver.problem(args.problem)
    gmap = _prepare(_load_geometry(args.geometry), args.degree, 0)
    rows = solver.convergence_study(
        prob, gmap, args.levels, route=args.assembly, merge_center=args.merge_center,
        order=_order(args), start=args.refine,
    )
    _write_csv(
        args.output,
        ["level", "dofs", "l2_error", "rate", "rate_dof"],
        [(r.level, r.dofs, r.l2_error, r.rate, r.rate_dof) for r in rows],
    )
    return EXIT_OK


def cmd_radial(args) -> int:
    gmap = _prepare(_load_geometry(args.geometry), args.degree, args.refine)
    U1 = radial.greville_boundary(gmap, _boundary_function(args.boundary_data))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ode, spectrum, sol = radial.modal_pipeline(gmap, U1)
        ref, fine = radial.galerkin_reference(gmap, U1, args.radial_spans)
        diff = radial.field_difference(fine, sol.field, ref)
        xi = np.linspace(0.0, 1.0, args.samples)
        U = sol.full(xi)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    prefix = args.output
    lam = spectrum.exponents
    order = np.lexsort((lam.imag, lam.real))
    stable = np.zeros(lam.size, dtype=bool)
    stable[spectrum.stable] = True
    eig_rows = [(k, lam[i].real, lam[i].imag, int(stable[i])) for k, i in enumerate(order)]
    modal_rows = [(x, j, u) for x, row in zip(xi, U) for j, u in enumerate(row)]
    if prefix:
        _write_csv(f"{prefix}_eigenvalues.csv", ["index", "real", "imag", "stable"], eig_rows)
        _write_csv(f"{prefix}_modal.csv", ["xi", "coefficient", "value"], modal_rows)
    else:
        _write_csv(None, ["index", "real", "imag", "stable"], eig_rows)
    print(
        f"n={ode.n} l2_discrepancy={diff!r} reference_dofs={ref.dofmap.n_unknowns}",
        file=sys.stderr,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--degree", type=int, default=None, help="elevate to this spline degree")
    common.add_argument("--refine", type=int, default=0, metavar="N", help="uniform dyadic refinements")
    common.add_argument("--quad-order", type=int, default=None, help="Gauss points per span (default degree+1)")
    common.add_argument("--assembly", choices=("standard", "separated"), default="standard")
    common.add_argument("--merge-center", action="store_true", help="one unknown at the scaling center")
    common.add_argument("--output", default=None, metavar="PATH")
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="sbiga", description="Scaled-boundary isogeometric Poisson solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parametrize", parents=[common], help="build a scaled-boundary map from a boundary curve")
    p.add_argument("boundary", help="curve or geometry document")
    p.add_argument("--center", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--orientation", choices=io.ORIENTATIONS, default="center-to-boundary")
    p.add_argument("--report", default=None, metavar="PATH", help="write the regularity report as JSON")
    p.add_argument("--grid", type=int, default=64, help="regularity sampling grid")
    p.set_defaults(func=cmd_parametrize)

    s = sub.add_parser("solve", parents=[common], help="solve a manufactured Poisson problem")
    s.add_argument("geometry", help="built-in tag or geometry document")
    s.add_argument("--problem", default="square-cos", help="square-cos, paraboloid-A, zero, harmonic-K")
    s.add_argument("--grid", type=int, default=21, help="samples per direction in the CSV")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("convergence", parents=[common], help="uniform refinement study")
    c.add_argument("geometry")
    c.add_argument("--problem", default="square-cos")
    c.add_argument("--levels", type=int, default=5)
    c.set_defaults(func=cmd_convergence)

    r = sub.add_parser("radial", parents=[common], help="modal solution of the radial ODE")
    r.add_argument("geometry")
    r.add_argument("--boundary-data", default="cos:1", help="cos:K, sin:K or const:C in the boundary parameter")
    r.add_argument("--radial-spans", type=int, default=16, help="radial elements of the 2D reference")
    r.add_argument("--samples", type=int, default=11, help="xi samples in the modal CSV")
    r.set_defaults(func=cmd_radial)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads > 1:
        _accel.set_threads(args.threads)
    try:
        return args.func(args)
    except (SbigaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    finally:
        if args.threads > 1:
            _accel.set_threads(1)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
