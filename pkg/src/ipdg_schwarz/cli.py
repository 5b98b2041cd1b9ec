"""Command line entry point: ``ipdg-schwarz run | verify | export-matrix``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .assembly import ProblemParams, assemble_operator, export_matrix_market
from .reaction import KINDS, make_model
from .verification import SUITES, verify


def _run_overrides(args: argparse.Namespace) -> dict[str, object]:
    """Config overrides from explicitly given flags only."""
    conv = {
        "table": str,
        "levels": ex.parse_levels,
        "eps": ex._parse_floats,
        "methods": ex.parse_methods,
        "sources": ex.parse_sources,
        "smoothing_steps": ex._parse_ints,
        "model": str,
        "groups": int,
        "penalty": float,
        "degree": int,
        "tol": float,
        "maxiter": int,
        "order": str,
        "sweeps": str,
        "csv": str,
        "json": str,
    }
    rename = {"eps": "epsilons", "csv": "csv_path", "json": "json_path"}
    out = {}
    for key, fn in conv.items():
        value = getattr(args, key, None)
        if value is not None:
            out[rename.get(key, key)] = fn(value)
    return out


def cmd_run(args: argparse.Namespace) -> int:
    overrides = ex.read_config_file(args.config) if args.config else {}
    overrides.update(_run_overrides(args))
    if "table" not in overrides:
        overrides["table"] = "poisson"
    config = ex.build_config(overrides)
    if args.out:
        config = ex.with_output_dir(config, args.out)

    def progress(rec: ex.RunRecord):
        if args.verbose:
            count = rec.iterations if rec.status == "ok" else rec.status
            print(
                f"levels={rec.levels} eps={rec.epsilon:g} {rec.method} m={rec.smoothing_steps} "
                f"{rec.source}: {count}",
                file=sys.stderr,
            )

    records = ex.run_table(config, progress)
    text = ex.format_table(config, records)
    print(text, end="")
    skipped = [r for r in records if r.status != "ok"]
    if skipped:
        reasons = sorted({f"{r.method} levels={r.levels}: {r.reason}" for r in skipped})
        print(f"{len(skipped)} runs not completed:", file=sys.stderr)
        for line in reasons:
            print(f"  {line}", file=sys.stderr)
    for path in ex.write_outputs(config, records, text):
        print(f"wrote {path}", file=sys.stderr)
    return 0 if ex.all_completed(records) else 1


def cmd_verify(args: argparse.Namespace) -> int:
    checks = verify(args.suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def cmd_export(args: argparse.Namespace) -> int:
    model = make_model(args.model, args.eps, args.groups)
    params = ProblemParams(model, degree=args.degree, penalty=args.penalty)
    op = assemble_operator(args.level, params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    export_matrix_market(op, out, comment=f"{model.label} mesh level {args.level} penalty {args.penalty:g}")
    print(f"wrote {out} ({op.shape[0]} dofs)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipdg-schwarz",
        description="Schwarz and multigrid preconditioned GMRES for multigroup IP-DG reaction-diffusion.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log every run to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an iteration-count table")
    run.add_argument("--config", help="key = value file; flags given here override it")
    run.add_argument("--table", choices=sorted(ex.TABLES) + ["custom"])
    run.add_argument(
        "--levels",
        help="row labels as a range or list, e.g. 2-7; a row with r levels solves on 2^(r-1) cells per side",
    )
    run.add_argument("--eps", help="comma separated epsilon values")
    run.add_argument("--methods", help="comma separated subset of U,2AS,2HS,2MS,MGAS,MGMS")
    run.add_argument("--sources", help="semicolon separated group vectors, e.g. '1,0;0,1'")
    run.add_argument("--smoothing-steps", dest="smoothing_steps", help="comma separated V-cycle steps m")
    run.add_argument("--model", choices=KINDS, help="reaction model for custom tables")
    run.add_argument("--groups", help="number of groups for custom tables")
    run.add_argument("--penalty", help="penalty parameter delta_0 (default 2)")
    run.add_argument("--degree", help="polynomial degree (default 1)")
    run.add_argument("--tol", help="relative residual target (default 1e-8)")
    run.add_argument("--maxiter", help="GMRES iteration limit (default 100)")
    run.add_argument("--order", choices=["lexicographic", "reverse", "redblack"])
    run.add_argument("--sweeps", choices=["pre_post", "post", "pre"], help="2MS sweep placement")
    run.add_argument("--out", help="directory receiving <table>.csv, .json and .txt")
    run.add_argument("--csv", help="CSV output path")
    run.add_argument("--json", help="JSON output path")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run oracle and property checks")
    ver.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    ver.set_defaults(func=cmd_verify)

    exp = sub.add_parser("export-matrix", help="write an assembled operator in Matrix Market format")
    exp.add_argument("--level", type=int, required=True, help="mesh level (2^level cells per side)")
    exp.add_argument("--model", choices=KINDS, default="zero")
    exp.add_argument("--groups", type=int, default=None)
    exp.add_argument("--eps", type=float, default=1.0)
    exp.add_argument("--penalty", type=float, default=2.0)
    exp.add_argument("--degree", type=int, default=1)
    exp.add_argument("--out", required=True, help="output .mtx path")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
