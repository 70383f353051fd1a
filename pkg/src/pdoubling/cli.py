"""Command line front end: ``pdoubling bounds|sweep|witness|oracle zq|verify``."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import acceptance
from .covering import tiling_cover
from .discrete_oracle import zq_max_experiment
from .lattices import ResourceCapExceeded
from .literals import ParseError, parse_body, parse_witness
from .report import SWEEP_COLUMNS, bounds, sweep, write_csv, write_dat
from .witness import LatticeDirichlet, QuadratureFailure, lattice_witness_ratio, ratio

EXIT_OK, EXIT_PARSE, EXIT_CONSISTENCY, EXIT_CAP = 0, 2, 3, 4
_GLOBAL_DEFAULTS = {"seed": 0, "tol": 1e-8, "json": None, "csv": None}


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.json:
        Path(args.json).write_text(text)
    else:
        sys.stdout.write(text)


def _int_range(text: str) -> list[int]:
    """'1..5' or '1,2,4' or '3'."""
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",")]


def _num_range(text: str) -> list:
    if ".." in text:
        return _int_range(text)
    return [Fraction(t) for t in text.split(",")]


def cmd_bounds(args) -> int:
    report = bounds(
        args.dim, args.u, args.v, seed=args.seed, tol=args.tol, witness_trials=args.witness_trials
    )
    _emit(report.to_json(), args)
    if args.certificate:
        U, V = parse_body(args.u, args.dim), parse_body(args.v, args.dim)
        cert = tiling_cover(U, V)
        Path(args.certificate).write_text(json.dumps(cert.to_json(), sort_keys=True) + "\n")
    if args.json:
        lo, hi = report.sandwich
        print(f"C_{args.dim}({report.U}, {report.V}) in [{lo:.12g}, {hi:.12g}]", file=sys.stderr)
    if not report.consistency:
        print("consistency violation: lower bound exceeds upper bound", file=sys.stderr)
        return EXIT_CONSISTENCY
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = sweep(
        _int_range(args.dims),
        _num_range(args.rs),
        args.body,
        witness_trials=args.witness_trials,
        seed=args.seed,
        tol=args.tol,
        jobs=args.jobs,
    )
    if args.csv:
        write_csv(rows, args.csv)
        write_dat(rows, Path(args.csv).with_suffix(".dat"))
    if args.json or not args.csv:
        _emit({"kind": "sweep", "body": args.body, "columns": SWEEP_COLUMNS, "rows": rows}, args)
    return EXIT_OK


def cmd_witness(args) -> int:
    U, V = parse_body(args.u, args.dim), parse_body(args.v, args.dim)
    f = parse_witness(args.f, args.dim, default_scale=1.0 / U.circumradius())
    out = {"kind": "witness", "dim": args.dim, "U": U.literal(), "V": V.literal(), "witness": f.literal()}
    if isinstance(f, LatticeDirichlet):
        val = lattice_witness_ratio(f.lattice, U, V, f.R)
        if isinstance(val, Fraction):
            out["exact"] = f"{val.numerator}/{val.denominator}"
    est = ratio(f, U, V, args.tol)
    out.update(value=est.value, abs_error=est.abs_error, lower=est.lower, method=est.method, node_count=est.node_count)
    _emit(out, args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    n = args.n if args.n is not None else args.q // 8
    _emit(zq_max_experiment(args.q, n, args.trials, args.seed), args)
    return EXIT_OK


def cmd_verify(args) -> int:
    only = set(args.only.split(",")) if args.only else None
    if only:
        unknown = only - set(acceptance.CRITERIA) - set(acceptance.AUDITS)
        if unknown:
            print(f"unknown check(s): {', '.join(sorted(unknown))}", file=sys.stderr)
            return EXIT_PARSE
    results = acceptance.run_all(only=only, tamper=args.tamper)
    ok = all(r.passed and r.within_budget for r in results)
    if args.json:
        _emit(
            {
                "kind": "verify",
                "passed": ok,
                "checks": [
                    {k: getattr(r, k) for k in ("name", "statement", "passed", "detail", "seconds", "budget")}
                    for r in results
                ],
            },
            args,
        )
    for r in results:
        print(r.line())
    print("all checks passed" if ok else "VERIFICATION FAILED")
    return EXIT_OK if ok else 1


def _common() -> argparse.ArgumentParser:
    # defaults are SUPPRESSed so a flag given before the subcommand is not reset
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="relative quadrature tolerance (default 1e-8)")
    p.add_argument("--json", metavar="OUT", default=argparse.SUPPRESS, help="write JSON here instead of stdout")
    p.add_argument("--csv", metavar="OUT", default=argparse.SUPPRESS, help="write CSV here (sweep)")
    return p


def _pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--u", required=True, help="body literal for U, e.g. ball:1 or box:1,2")
    p.add_argument("--v", required=True, help="body literal for V")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pdoubling", parents=[common], description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="bound report for C_n(U, V)")
    _pair(p)
    p.add_argument("--witness-trials", type=int, default=200)
    p.add_argument("--certificate", metavar="OUT", help="also export the tiling certificate as JSON")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", parents=[common], help="bounds over ranges of n and r with V = rU")
    p.add_argument("--dims", default="1..3", help="e.g. 1..3 or 1,2,5")
    p.add_argument("--rs", default="1..10", help="e.g. 1..10 or 1,2.5,50")
    p.add_argument("--body", choices=["box", "cube", "ball", "cross"], default="box")
    p.add_argument("--witness-trials", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("witness", parents=[common], help="doubling ratio of one witness function")
    _pair(p)
    p.add_argument("--f", required=True, help="gauss:s | autocorr:body | cms:seed=..,J=..,scale=.. | latdir:L,R=..")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("oracle", help="discrete oracles")
    osub = p.add_subparsers(dest="oracle", required=True)
    z = osub.add_parser("zq", parents=[common], help="max doubling ratio on Z_q over random witnesses")
    z.add_argument("--q", type=int, default=1024)
    z.add_argument("--n", type=int, default=None, help="default q/8")
    z.add_argument("--trials", type=int, default=10_000)
    z.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated check names")
    p.add_argument("--tamper", choices=["grid", "count"], help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ResourceCapExceeded, QuadratureFailure) as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        # invalid bodies, lattices or parameter combinations
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

if __name__ == "__main__":
    sys.exit(main())
