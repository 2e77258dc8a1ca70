"""``reflekt`` command line.

Machine output (JSON or CSV) goes to stdout, diagnostics to stderr.
Exit codes: 0 ok, 1 verification counterexample, 2 usage error,
3 numerical failure or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .chamber import canonical_representative, group_majorizes, in_chamber
from .errors import CharacterizationFailure, NumericalFailure, ReflektError
from .export import emit_plot_data
from .groups import enumerate_group, orbit, parse_group_spec, stabilizer
from .harness import RUNNERS
from .projection import (
    ball_oracle,
    box_oracle,
    finite_orbit_oracle,
    hull_union_oracle,
    project_invariant,
    sparse_project,
    sphere_oracle,
)
from .recovery import (
    SWEEP_HEADER,
    generate_problem,
    iht_solve,
    recovery_sweep,
    relative_error,
    rows_to_csv,
)

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _matrix(a):
    return [_floats(row) for row in np.atleast_2d(a)]


def _vector(text=None, path=None, key="v"):
    if path:
        with open(path) as fh:
            doc = json.load(fh)
        doc = doc[key] if isinstance(doc, dict) else doc
    elif text is not None:
        doc = json.loads(text)
    else:
        raise UsageError("a vector is required (--vec or --input)")
    v = np.asarray(doc, dtype=float)
    if v.ndim != 1:
        raise UsageError("expected a flat vector")
    return v


def _emit(doc):
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def _group(args):
    rs = parse_group_spec(args.group)
    return rs, enumerate_group(rs, args.cap)


def _set_oracle(spec, rs, G):
    kind, _, arg = spec.partition(":")
    if kind == "ball":
        return ball_oracle(rs, float(arg or 1), G)
    if kind == "sphere":
        return sphere_oracle(rs, float(arg or 1), G)
    if kind == "box":
        return box_oracle(rs, float(arg or 1), G)
    if kind in ("orbits", "hulls"):
        seeds = np.atleast_2d(np.asarray(json.loads(arg), dtype=float))
        return finite_orbit_oracle(G, seeds) if kind == "orbits" else hull_union_oracle(G, seeds)
    raise UsageError(f"unknown set {spec!r}; use ball:R, sphere:R, box:L, orbits:JSON, hulls:JSON")


# ---------------------------------------------------------------------------
# handlers


def cmd_group(args):
    rs, G = _group(args)
    if args.action == "enumerate":
        doc = G.to_json()
        doc["order"] = G.order
        _emit(doc)
        return EXIT_OK
    x = _vector(args.vec, args.input)
    if args.action == "orbit":
        pts = orbit(G, x)
        if args.plot_data:
            emit_plot_data([pts], args.plot_data)
        _emit({"group": rs.name, "point": _floats(x), "orbit": _matrix(pts)})
        return EXIT_OK
    st = stabilizer(G, x)
    _emit({"group": rs.name, "point": _floats(x), "root_subset": list(st.root_subset),
           "order": st.order, "elements": [_matrix(g.matrix) for g in st.elements]})
    return EXIT_OK


def cmd_chamber(args):
    rs = parse_group_spec(args.group)
    x = _vector(args.vec, args.input)
    if len(x) != rs.dimension:
        raise UsageError("vector dimension does not match the group")
    if args.action == "rep":
        dec = canonical_representative(rs, x)
        _emit({"rep": _floats(dec.representative), "word": list(dec.word)})
    elif args.action == "member":
        _emit({"member": in_chamber(rs, x)})
    else:
        y = _vector(args.vec2, args.input2)
        G = enumerate_group(rs, args.cap)
        v = group_majorizes(G, x, y)
        _emit({"majorizes": v.holds,
               "weights": None if v.weights is None else _floats(v.weights)})
    return EXIT_OK


def cmd_project(args):
    x = _vector(args.vec, args.input)
    if args.action == "sparse":
        if args.s is None:
            raise UsageError("--s is required")
        B = None
        if args.ball is not None and args.box is not None:
            raise UsageError("--ball and --box are exclusive")
        if args.ball is not None:
            B = ball_oracle(parse_group_spec(f"B:{len(x)}"), args.ball)
        elif args.box is not None:
            B = box_oracle(parse_group_spec(f"B:{len(x)}"), args.box)
        proj = sparse_project(x, args.s, B)
    else:
        if not args.group or not args.set:
            raise UsageError("--group and --set are required")
        rs, G = _group(args)
        proj = project_invariant(_set_oracle(args.set, rs, G), x)
    pts = proj.enumerate(args.limit)
    order = np.lexsort(pts.T[::-1])
    _emit({"projections": _matrix(pts[order]), "distance": proj.distance})
    return EXIT_OK


def cmd_verify(args):
    rs, G = _group(args)
    rep = RUNNERS[args.check](G, args.trials, seed=args.seed)
    _emit(rep.to_json())
    if not rep.passed:
        print(f"{args.check} on {rs.name}: {rep.counterexamples} counterexample(s)", file=sys.stderr)
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def cmd_cs(args):
    if args.action == "solve":
        p = generate_problem(args.n, args.m, args.s, seed=args.seed, noise_level=args.noise)
        if args.ball is not None:
            p.B_constraint = ball_oracle(parse_group_spec(f"B:{args.n}"), args.ball)
        x, trace = iht_solve(p, max_iter=args.max_iter)
        if args.plot_data:
            emit_plot_data(trace, args.plot_data)
        _emit({"x": _floats(x), "x_true": _floats(p.x_true), "status": trace.status,
               "rel_err": relative_error(x, p.x_true), "iterations": len(trace.iterates),
               "trace": trace.rows()})
        return EXIT_OK
    rows = recovery_sweep(args.n, args.m_list, args.s_list, args.trials, seed=args.seed,
                          workers=args.workers)
    if args.plot_data:
        emit_plot_data(rows, args.plot_data)
    sys.stdout.write(rows_to_csv(rows, SWEEP_HEADER))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reflekt", description="Finite reflection group toolkit.")
    ap.add_argument("--seed", type=int, default=0, help="overridden by REFLEKT_SEED")
    sub = ap.add_subparsers(dest="command", required=True)

    def vec_args(p, second=False):
        p.add_argument("--vec", help="JSON list")
        p.add_argument("--input", help='JSON file holding a list or {"v": [...]}')
        if second:
            p.add_argument("--vec2")
            p.add_argument("--input2")

    def group_arg(p, required=True):
        p.add_argument("--group", required=required, help="A:n | B:n | D:n | I2:m | custom:path.json")
        p.add_argument("--cap", type=int, default=100_000, help="group size cap")

    g = sub.add_parser("group")
    g.add_argument("action", choices=["enumerate", "orbit", "stabilizer"])
    group_arg(g)
    vec_args(g)
    g.add_argument("--plot-data", help="write x,y,orbit_index CSV (2D groups)")
    g.set_defaults(func=cmd_group)

    c = sub.add_parser("chamber")
    c.add_argument("action", choices=["rep", "member", "majorizes"])
    group_arg(c)
    vec_args(c, second=True)
    c.set_defaults(func=cmd_chamber)

    p = sub.add_parser("project")
    p.add_argument("action", choices=["sparse", "invariant"])
    group_arg(p, required=False)
    vec_args(p)
    p.add_argument("--s", type=int)
    p.add_argument("--ball", type=float, help="intersect with the ball of this radius")
    p.add_argument("--box", type=float, help="intersect with the box [-L, L]^n")
    p.add_argument("--set", help="ball:R | sphere:R | box:L | orbits:JSON | hulls:JSON")
    p.add_argument("--limit", type=int, default=10_000)
    p.set_defaults(func=cmd_project)

    v = sub.add_parser("verify")
    v.add_argument("check", choices=sorted(RUNNERS))
    group_arg(v)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    cs = sub.add_parser("cs")
    cs.add_argument("action", choices=["solve", "sweep"])
    cs.add_argument("--n", type=int, default=64)
    cs.add_argument("--m", type=int, default=32)
    cs.add_argument("--s", type=int, default=4)
    cs.add_argument("--noise", type=float, default=0.0)
    cs.add_argument("--ball", type=float)
    cs.add_argument("--max-iter", type=int, default=5000)
    cs.add_argument("--m-list", type=_int_list, default=[16, 32])
    cs.add_argument("--s-list", type=_int_list, default=[2, 4])
    cs.add_argument("--trials", type=int, default=10)
    cs.add_argument("--workers", type=int, default=1)
    cs.add_argument("--plot-data", help="write the trace or sweep table as CSV")
    cs.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    cs.set_defaults(func=cmd_cs)
    return ap


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    env = os.environ.get("REFLEKT_SEED")
    if env is not None:
        try:
            args.seed = int(env)
        except ValueError:
            print(f"REFLEKT_SEED must be an integer, got {env!r}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except CharacterizationFailure as e:
        _emit({"counterexample": e.counterexample, "message": str(e)})
        return EXIT_COUNTEREXAMPLE
    except (NumericalFailure, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, ReflektError, json.JSONDecodeError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
