"""Command-line interface.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.  Every
stochastic step requires ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .errors import ModescopeError
from .geometry import (ScaleParams, WedgeLayout, bounding_box, build_grid, default_mesh, default_scales,
                       direction_set)
from .inference import GridModeProcedure, LocalModeProcedure, detect_modes, local_mode_test, monotonicity_map
from .io import dumps, parse_points, to_document
from .nullsim import NullQuantile, calibrate
from .render import render_map
from .univariate import multiscale_statistic, univariate_quantile, univariate_test

log = logging.getLogger("modescope")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p, seeded=True, data=True):
    if data:
        p.add_argument("--input", required=True, help="CSV/whitespace file of points, one per row")
    p.add_argument("--output", help="result document path (default: stdout)")
    p.add_argument("--alpha", type=float, default=0.05)
    if seeded:
        p.add_argument("--seed", type=int, help="seed for every stochastic step (required when one runs)")
        p.add_argument("--reps", type=int, default=1000, help="Monte-Carlo replicates for kappa")
        p.add_argument("--workers", type=int, default=1)


def _scales(p):
    p.add_argument("--C1", type=float, default=2.0)
    p.add_argument("--C2", type=float, default=9.65)
    p.add_argument("--length", type=float, help="explicit wedge length (overrides C1)")
    p.add_argument("--angle", type=float, help="explicit half-opening angle in radians (overrides C2)")
    p.add_argument("--directions", type=int, help="number of wedge axes")


def _calib(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--calibrated", action="store_true", help="calibrate kappa on uniform reference data")
    g.add_argument("--raw", action="store_true", help="simulate kappa conditional on wedge counts (default)")
    p.add_argument("--reference-box", type=_floats, help="lower...,upper... of the uniform reference box")
    p.add_argument("--kappa-file", help="reuse kappa from an earlier calibrate document")


_LIST_OPTS = ("--x0", "--box", "--reference-box")


def _join_negative_lists(argv: list) -> list:
    # "--x0 -2,0" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            try:
                _floats(argv[i + 1])
            except argparse.ArgumentTypeError:
                pass
            else:
                out.append(f"{tok}={argv[i + 1]}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modescope", description="Multiscale wedge tests for monotonicity and modes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("local-test", help="test for a mode at one point")
    _common(p), _scales(p), _calib(p)
    p.add_argument("--x0", type=_floats, required=True)

    for name, text in (("map", "monotonicity map on a grid"), ("detect-modes", "mode detection on a grid")):
        p = sub.add_parser(name, help=text)
        _common(p), _scales(p), _calib(p)
        p.add_argument("--box", type=_floats,
                       help="lower...,upper... of the grid (default: data box padded by one wedge length)")
        p.add_argument("--mesh", type=float, help="grid spacing (default: derived from C1 and n)")
        if name == "map":
            p.add_argument("--subsections", action="store_true", help="also test every wedge subsection")
            p.add_argument("--svg", help="write an SVG rendering of the map (d=2)")

    p = sub.add_parser("calibrate", help="calibrate kappa for a local test or a grid")
    _common(p, data=False), _scales(p)
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--reference-box", type=_floats, required=True)
    p.add_argument("--x0", type=_floats, help="vertex of a local test")
    p.add_argument("--box", type=_floats, help="grid box for mode detection")
    p.add_argument("--mesh", type=float)

    p = sub.add_parser("simulate", help="reproduce a simulation table")
    _common(p, data=False)
    p.add_argument("--scenario", required=True, choices=harness.TABLES)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--slow", action="store_true", help="include the n=5000 rows")

    p = sub.add_parser("univariate", help="univariate multiscale test or quantile")
    _common(p, data=False)
    p.add_argument("--input", help="one-column sample file")
    p.add_argument("--n", type=int, help="sample size when only the quantile is wanted")
    return parser


def _box(values, d=None):
    if values is None or len(values) % 2 or (d is not None and len(values) != 2 * d):
        raise UsageError(f"box needs {'2*d' if d is None else 2 * d} numbers (lower..., upper...)")
    h = len(values) // 2
    return np.array(values[:h]), np.array(values[h:])


def _layout(args, n: int, d: int) -> WedgeLayout:
    params = ScaleParams(args.C1, args.C2, n, d)
    if args.length is None and args.angle is None:
        return WedgeLayout.from_params(params, count=args.directions)
    length = args.length if args.length is not None else default_scales(params)[0]
    angle = args.angle if args.angle is not None else default_scales(params)[1]
    return WedgeLayout(length, angle, direction_set(d, angle, count=args.directions))


def _need_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for this command (it runs a Monte-Carlo step)")


def _mode(args) -> str:
    return "calibrated" if getattr(args, "calibrated", False) else "raw"


def _kappa(args):
    if getattr(args, "kappa_file", None):
        with open(args.kappa_file, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not doc.get("kappa"):
            raise ModescopeError(f"{args.kappa_file} holds no kappa")
        return NullQuantile.from_dict(doc["kappa"])
    _need_seed(args)
    return None


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "output", "svg", "workers")}


def _ref_box(args, d):
    return None if args.reference_box is None else _box(args.reference_box, d)


def run(args):
    """Execute a parsed command; returns the result document."""
    cmd = args.command
    if cmd in ("local-test", "map", "detect-modes"):
        X = parse_points(args.input)
        n, d = X.shape
        layout = _layout(args, n, d)
        kappa = _kappa(args)
        common = dict(alpha=args.alpha, seed=args.seed or 0, reps=args.reps, kappa=kappa,
                      reference_box=_ref_box(args, d), workers=args.workers)
        if cmd == "local-test":
            if len(args.x0) != d:
                raise UsageError(f"--x0 needs {d} coordinates")
            res = local_mode_test(X, args.x0, layout, mode=_mode(args), **common)
        else:
            if args.box is None:
                lo, hi = bounding_box(X, pad=layout.length)
            else:
                lo, hi = _box(args.box, d)
            mesh = args.mesh if args.mesh is not None else default_mesh(ScaleParams(args.C1, args.C2, n, d))
            grid = build_grid(lo, hi, mesh)
            if cmd == "map":
                res = monotonicity_map(X, grid, layout, use_subsections=args.subsections, mode=_mode(args),
                                       **common)
                if args.svg:
                    render_map(res, args.svg)
            else:
                res = detect_modes(X, grid, layout, mode=_mode(args), **common)
        return to_document(res, _config(args), args.seed)
    if cmd == "calibrate":
        _need_seed(args)
        d = args.dim
        layout = _layout(args, args.n, d)
        if args.x0 is not None:
            proc = LocalModeProcedure(np.array(args.x0), layout)
        elif args.box is not None and args.mesh is not None:
            proc = GridModeProcedure(build_grid(*_box(args.box, d), args.mesh), layout)
        else:
            raise UsageError("calibrate needs --x0 or --box with --mesh")
        q = calibrate(proc, args.alpha, args.reps, _box(args.reference_box, d), args.n, args.seed,
                      workers=args.workers)
        return to_document(q, _config(args), args.seed)
    if cmd == "simulate":
        _need_seed(args)
        table = harness.run_table(args.scenario, args.runs, args.seed, args.slow, args.workers)
        return to_document(table, _config(args), args.seed, kind="simulate")
    if cmd == "univariate":
        _need_seed(args)
        payload = {}
        if args.input:
            x = parse_points(args.input)
            if x.shape[1] != 1:
                raise ModescopeError(f"univariate input must have one column, found {x.shape[1]}")
            n = x.shape[0]
            kappa = univariate_quantile(n, args.alpha, args.reps, args.seed, args.workers)
            payload = {"n": n, "statistic": multiscale_statistic(x), "kappa": kappa,
                       "intervals": [iv.to_dict() for iv in univariate_test(x, kappa)]}
        elif args.n:
            payload = {"n": args.n, "kappa": univariate_quantile(args.n, args.alpha, args.reps, args.seed,
                                                                 args.workers)}
        else:
            raise UsageError("univariate needs --input or --n")
        return to_document(payload, _config(args), args.seed, kind="univariate")
    raise UsageError("no command given")


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            raise UsageError(parser.format_help())
        args = parser.parse_args(_join_negative_lists(argv))
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        doc = run(args)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return 1
    except (ModescopeError, ValueError, OSError) as exc:
        sys.stderr.write(f"modescope: error: {exc}\n")
        return 2
    text = dumps(doc)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            sys.stderr.write(f"modescope: error: {exc}\n")
            return 2
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
