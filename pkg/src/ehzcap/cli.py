"""Command-line entry point: JSON in, JSON/CSV/SVG out.

Exit status 0 on success, 2 when an input is invalid, 3 when a computed
identity misses its tolerance.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import capacity, covering, dynamics, equality_cases, symplecto
from .geom2d import ConvexPolygon, GeometryError

OUTPUT_DIR_ENV = "EHZCAP_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_ASSERT = 0, 2, 3
CATALOG = ("square-diamond", "triangle-hexagon", "triangle-parallelogram", "quad-partner")


class InputError(Exception):
    """Bad file, bad JSON or a missing field."""


class IdentityFailure(Exception):
    """A computed value missed its tolerance."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def resolve_output(path):
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_atomic(path, text):
    """Write to a temporary file next to the target, then rename over it."""
    path = resolve_output(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def emit(args, text):
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def load_json(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{what}: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_polygon(path, what):
    data = load_json(path, what)
    if not isinstance(data, dict) or "vertices" not in data:
        raise InputError(f"{what}: field 'vertices' missing in {path}")
    try:
        P = ConvexPolygon.from_json(data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: field 'vertices' is invalid: {exc}") from exc
    if P.degenerate:
        raise InputError(f"{what}: field 'vertices' spans no area")
    return P


def check(ok, message):
    if not ok:
        raise IdentityFailure(message)


# ---------------------------------------------------------------- commands

def cmd_capacity(args):
    K, T = load_polygon(args.K, "--K"), load_polygon(args.T, "--T")
    res = capacity.ehz_capacity(K, T, args.resolution, dual=not args.no_dual)
    emit(args, dumps(res.to_dict()))
    if res.dual_value is not None:
        check(abs(res.value - res.dual_value) <= args.tol * res.value,
              f"capacity {res.value} and dual {res.dual_value} disagree")


def cmd_ratio(args):
    K, T = load_polygon(args.K, "--K"), load_polygon(args.T, "--T")
    rep = capacity.systolic_report(K, T, args.resolution)
    emit(args, dumps(rep.__dict__))
    check(rep.ratio <= 1 + args.tol, f"systolic ratio {rep.ratio} exceeds 1")
    if args.expect_equality:
        check(abs(rep.ratio - 1) <= args.tol, f"systolic ratio {rep.ratio} is not 1")


def cmd_equality(args):
    K, T = dynamics.catalog_pair(args.case, args.a1, args.a2, tuple(args.t), args.side)
    rep = capacity.systolic_report(K, T, args.resolution)
    out = {"case": args.case, "K": K.vertices, "T": T.vertices, **rep.__dict__}
    emit(args, dumps(out))
    check(abs(rep.ratio - 1) <= args.tol, f"{args.case}: ratio {rep.ratio} differs from 1 by more than {args.tol}")


def cmd_zoll(args):
    K, T = dynamics.catalog_pair(args.case, args.a1, args.a2, tuple(args.t), args.side)
    rep = dynamics.zoll_report(K, T, args.starts, args.seed)
    closed_ok = rep["closed"] == rep["starts"] and rep["bounce_counts"] == [4]
    length_ok = rep["max_length_error"] <= args.length_tol and rep["max_residual"] <= args.residual_tol
    bounces = ",".join(map(str, rep["bounce_counts"])) or "none"
    length = "capacity" if length_ok else f"capacity+{rep['max_length_error']:.3g}"
    line = f"closed={rep['closed']}/{rep['starts']}, bounces={bounces}, length={length}\n"
    if args.out:
        write_atomic(args.out, dumps(rep))
    sys.stdout.write(line)
    check(closed_ok and length_ok, "trajectories are not all closed 4-bounce minimizers")


def cmd_covering(args):
    if args.sweep:
        rows = covering.conjecture_sweep(args.grid, args.starts, args.seed)
        emit(args, covering.sweep_to_csv(rows))
        flagged = [r for r in rows if r["flagged"]]
        sys.stderr.write(
            f"{len(rows)} instances, {len(flagged)} flagged; "
            "no flag is numerical evidence for the conjecture, not a proof\n")
        check(not flagged, f"{len(flagged)} sweep entries fall below the square")
        return
    if args.instance == "trapezoid":
        inst = covering.trapezoid_instance(args.z)
    else:
        inst = covering.conjecture_instance(args.a1, args.a2)
    res = covering.minimize_hull_area(inst, args.starts, args.seed)
    out = res.to_dict()
    if args.instance == "trapezoid" and args.certify:
        cert = covering.trapezoid_case_certify(args.z)
        out["certificate"] = {"passed": cert.passed, "square_area": cert.square_area,
                              "cases": [c.__dict__ for c in cert.cases]}
        check(cert.passed, "trapezoid case bounds not confirmed")
    emit(args, dumps(out))
    check(not res.below_reference, f"best area {res.best_area} is below the reference {res.reference_area}")


def cmd_counterexample(args):
    rows = dynamics.counterexample_catalog(args.resolution)
    for i, c in enumerate(rows, 1):
        sys.stdout.write(f"instance {i}: length={c.ell:.12g} capacity={c.capacity:.6g} "
                         f"(expected {c.ell_expected:g} vs {c.capacity_expected:g})\n")
    if args.out:
        write_atomic(args.out, dumps([{
            "ell": c.ell, "ell_expected": c.ell_expected, "capacity": c.capacity,
            "capacity_expected": c.capacity_expected, "q": c.q, "p": c.p,
            "q_not_translatable": c.q_in_fcp, "verified": c.verified} for c in rows]))
    check(all(c.verified for c in rows), "counterexample values not reproduced")


def cmd_normal_form(args):
    if args.t is not None:
        (xm, ym), a, a1, a2 = symplecto.triangle_normal_form(args.t)
        residual = symplecto.triangle_normal_form_residual(args.t)
        out = {"x_chain": [xm.to_dict()], "y_chain": [ym.to_dict()], "a": a, "a1": a1, "a2": a2,
               "residual": residual}
    else:
        data = load_json(args.quad, "--quad")
        try:
            p = equality_cases.QuadParams.from_json(data)
        except (TypeError, ValueError) as exc:
            raise InputError(f"--quad: {exc}") from exc
        (xc, yc), ball = symplecto.quadrilateral_normal_form(p)
        Q, A = equality_cases.quadrilateral_from_params(p), equality_cases.equality_partner(p)
        residual = max(
            symplecto.vertex_residual(symplecto.apply_chain(xc, Q), equality_cases.diamond(p.a1, p.a2)),
            symplecto.vertex_residual(symplecto.apply_chain(yc, A), equality_cases.unit_square()))
        out = {"x_chain": [m.to_dict() for m in xc], "y_chain": [m.to_dict() for m in yc],
               "a": ball.a, "a1": ball.a1, "a2": ball.a2, "ball_radius": ball.radius, "residual": residual}
    emit(args, dumps(out))
    check(out["residual"] <= args.tol, f"vertex residual {out['residual']} exceeds {args.tol}")


def cmd_plot(args):
    if args.K or args.T:
        if not (args.K and args.T):
            raise InputError("plot: --K and --T must be given together")
        K, T = load_polygon(args.K, "--K"), load_polygon(args.T, "--T")
    else:
        K, T = dynamics.catalog_pair(args.case, args.a1, args.a2, tuple(args.t), args.side)
    rng = np.random.default_rng(args.seed)
    traj = dynamics.trace(K, T, dynamics.random_regular_start(K, T, rng))
    emit(args, dynamics.trajectory_svg(K, T, traj))


# ------------------------------------------------------------------ parser

def _catalog_options(p, default="square-diamond"):
    p.add_argument("--case", choices=CATALOG, default=default)
    p.add_argument("--a1", type=float, default=0.5)
    p.add_argument("--a2", type=float, default=0.25)
    p.add_argument("--t", type=float, nargs=2, default=(0.05, 0.02), metavar=("T1", "T2"))
    p.add_argument("--side", type=float, default=1.0)


def build_parser():
    parser = argparse.ArgumentParser(prog="ehzcap", description="EHZ capacity of polygon products")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV})")
        return p

    p = command("capacity", cmd_capacity, "capacity of K x T")
    p.add_argument("--K", required=True)
    p.add_argument("--T", required=True)
    p.add_argument("--resolution", type=int, default=capacity.DEFAULT_RESOLUTION)
    p.add_argument("--no-dual", action="store_true")
    p.add_argument("--tol", type=float, default=1e-3)

    p = command("ratio", cmd_ratio, "systolic ratio of K x T")
    p.add_argument("--K", required=True)
    p.add_argument("--T", required=True)
    p.add_argument("--resolution", type=int, default=capacity.DEFAULT_RESOLUTION)
    p.add_argument("--expect-equality", action="store_true")
    p.add_argument("--tol", type=float, default=2e-3)

    p = command("equality", cmd_equality, "ratio of a catalog equality case")
    _catalog_options(p)
    p.add_argument("--resolution", type=int, default=capacity.DEFAULT_RESOLUTION)
    p.add_argument("--tol", type=float, default=2e-3)

    p = command("zoll", cmd_zoll, "closure of regular billiard trajectories")
    _catalog_options(p)
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--residual-tol", type=float, default=1e-10)
    p.add_argument("--length-tol", type=float, default=1e-6)

    p = command("covering", cmd_covering, "hull-area minimization and conjecture sweep")
    p.add_argument("--instance", choices=("trapezoid", "conjecture"), default="trapezoid")
    p.add_argument("--z", type=float, default=0.5)
    p.add_argument("--a1", type=float, default=0.5)
    p.add_argument("--a2", type=float, default=0.25)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)

    p = command("counterexample", cmd_counterexample, "the two non-regular long trajectories")
    p.add_argument("--resolution", type=int, default=capacity.DEFAULT_RESOLUTION)

    p = command("normal-form", cmd_normal_form, "symplectic normal-form map chains")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, nargs=2, metavar=("T1", "T2"))
    g.add_argument("--quad", help="QuadParams JSON file")
    p.add_argument("--tol", type=float, default=1e-12)

    p = command("plot", cmd_plot, "SVG of bodies and one trajectory")
    _catalog_options(p)
    p.add_argument("--K")
    p.add_argument("--T")
    p.add_argument("--seed", type=int, required=True)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        args.func(args)
    except IdentityFailure as exc:
        sys.stderr.write(f"assertion failed: {exc}\n")
        return EXIT_ASSERT
    except (InputError, GeometryError, ValueError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
