"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _parallel
from .femspace import Derivative, FunctionSpace
from .linalg import ConvergenceError
from .mesh import MeshError, build_structured, quality_report, read_mesh, write_mesh
from .norms import h1_error, l2_error
from .savgol1d import SGWindow, kernel
from .sisg_filter import l2_project, max_edge_jump
from .vtk import write_vtk

log = logging.getLogger("sisg")

CORNER_COLUMNS = "N,tolerance,sisg_error,h1_error,epsilon"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _float_list(s):
    try:
        vals = [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {s!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return vals


def _rect(s):
    parts = [float(t) for t in s.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rect is x0,y0,x1,y1")
    return tuple(parts)


def rational(c: float, max_den: int = 10 ** 6):
    """Fraction equal to ``c`` up to rounding, or None."""
    f = Fraction(c).limit_denominator(max_den)
    if abs(float(f) - c) <= 1e-14 * max(1.0, abs(c)):
        return f
    return None


def format_kernel(weights) -> list[str]:
    lines = [" ".join(f"{w:.15g}" for w in weights)]
    fracs = [rational(float(w)) for w in weights]
    if all(f is not None for f in fracs):
        lines.append(" ".join(str(f) for f in fracs))
    return lines


def _cmd_savgol(args):
    w = SGWindow(args.window, args.degree, args.spacing, args.offset, args.deriv)
    for line in format_kernel(kernel(w)):
        print(line)


def _cmd_poisson(args):
    from .problems import demo_exact, demo_exact_dx, solve_poisson_demo

    uh = solve_poisson_demo(args.n, args.degree)
    direction = args.filter_derivative
    raw = Derivative(uh, direction)
    filtered = l2_project(FunctionSpace(uh.space.mesh, "CG", args.degree), raw,
                          args.quad_degree, args.solver_tol)
    exact = demo_exact()
    exact_d = demo_exact_dx() if direction == "dx" else None
    q = args.quad_degree or 2 * args.degree + 4
    rep = h1_error(uh, exact, q)
    print(f"n={args.n} degree={args.degree} dofs={uh.space.n_dofs}")
    print(f"u_h   L2 error {rep.l2_error:.6e}  H1 seminorm error {rep.h1_seminorm_error:.6e}")
    if exact_d is None:
        from .femspace import ScalarField
        g = exact.gradient
        exact_d = ScalarField(lambda x, y: g(x, y)[1])
    print(f"raw {direction}      L2 error {l2_error(raw, exact_d, q):.6e}  "
          f"max edge jump {max_edge_jump(raw):.3e}")
    print(f"filtered {direction} L2 error {l2_error(filtered, exact_d, q):.6e}  "
          f"max edge jump {max_edge_jump(filtered):.3e}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"poisson_n{args.n}_p{args.degree}.vtk"
    write_vtk(path, uh.space.mesh,
              {"u_h": uh, f"raw_{direction}": raw, f"filtered_{direction}": filtered},
              title=f"poisson demo n={args.n} degree={args.degree}")
    print(f"wrote {path}")


def corner_csv(records) -> str:
    lines = [CORNER_COLUMNS]
    for r in records:
        lines.append(f"{r.N},{r.tolerance:.6e},{r.sisg_error:.6e},{r.h1_error:.6e},{r.epsilon:.6e}")
    return "\n".join(lines) + "\n"


def _cmd_corner(args):
    from .problems import adaptive_study, filtered_derivative

    records = adaptive_study(sorted(args.tolerances, reverse=True), args.max_vertices)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "corner_study.csv").write_text(corner_csv(records))
    print(corner_csv(records), end="")
    last = records[-1]
    from .problems import solve_corner
    uh = solve_corner(last.mesh)
    write_vtk(out / "corner_final.vtk", last.mesh,
              {"u_h": uh, "filtered_dx": filtered_derivative(uh, "dx")},
              title=f"corner problem N={last.N}")
    capped = [r for r in records if r.capped]
    if capped:
        print(f"warning: vertex cap reached for tolerances "
              f"{', '.join(f'{r.tolerance:g}' for r in capped)}", file=sys.stderr)


def _cmd_mesh_quality(args):
    mesh = read_mesh(args.mesh)
    print(f"vertices            {mesh.n_vertices}")
    print(quality_report(mesh))


def _cmd_mesh(args):
    mesh = build_structured(args.nx, args.ny, args.rect, args.diag)
    write_mesh(mesh, args.output)
    print(f"wrote {args.output}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles")


def _cmd_study(args):
    from .studies import run_case

    tab = run_case(args.case, args.family, args.degree, args.levels,
                   quad_degree=args.quad_degree, solver_tol=args.solver_tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"study_{args.case}_{args.family}{args.degree}.csv"
    path.write_text(tab.to_csv())
    print(tab.to_csv(), end="")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--quad-degree", type=int, default=None,
                        help="override quadrature exactness degree")
    common.add_argument("--solver-tol", type=float, default=1e-10)
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="sisg", description="Savitzky-Golay style filtering on triangle meshes")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("savgol", parents=[common], help="print a 1-D Savitzky-Golay kernel")
    s.add_argument("--window", type=_positive_int, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--deriv", type=int, default=0)
    s.add_argument("--offset", type=int, default=None, help="1-based evaluation position")
    s.add_argument("--spacing", type=float, default=1.0)
    s.set_defaults(func=_cmd_savgol)

    s = sub.add_parser("poisson", parents=[common], help="smooth Poisson demo with filtering")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--degree", type=_positive_int, required=True)
    s.add_argument("--filter-derivative", choices=("dx", "dy"), default="dx")
    s.set_defaults(func=_cmd_poisson)

    s = sub.add_parser("corner", parents=[common], help="adaptive corner-singularity study")
    s.add_argument("--tolerances", type=_float_list, required=True)
    s.add_argument("--max-vertices", type=_positive_int, default=20_000)
    s.set_defaults(func=_cmd_corner)

    s = sub.add_parser("mesh-quality", parents=[common], help="nondegeneracy report")
    s.add_argument("--mesh", required=True)
    s.set_defaults(func=_cmd_mesh_quality)

    s = sub.add_parser("mesh", parents=[common], help="write a structured mesh file")
    s.add_argument("--nx", type=_positive_int, required=True)
    s.add_argument("--ny", type=_positive_int, required=True)
    s.add_argument("--rect", type=_rect, default=(0.0, 0.0, 1.0, 1.0))
    s.add_argument("--diag", choices=("right", "left", "crossed"), default="right")
    s.add_argument("--output", required=True)
    s.set_defaults(func=_cmd_mesh)

    s = sub.add_parser("study", parents=[common], help="convergence study CSV")
    s.add_argument("--case", choices=("l2-rates", "h1-rates", "hypothesis", "theorem-ratio"),
                   required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--family", choices=("cg", "dg"), required=True)
    s.add_argument("--levels", type=_positive_int, default=4)
    s.set_defaults(func=_cmd_study)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.quad_degree is not None and not 0 <= args.quad_degree <= 20:
            raise UsageError("--quad-degree must be in 0..20")
        if args.solver_tol <= 0:
            raise UsageError("--solver-tol must be positive")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _parallel.set_num_threads(args.threads)
    try:
        args.func(args)
    except (ConvergenceError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
