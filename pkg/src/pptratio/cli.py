"""Command-line interface.

Subcommands: run, resume, report, validate, dump-points, show-state.
Machine output goes to files (or stdout for dump/show); progress goes to
stderr.  ``run`` takes a JSON config file; individual flags override file
fields and the effective configuration is echoed into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import runner, validation
from .config import RunConfig
from .estimator import CheckpointError, EditRule
from .faure import SequenceConfig, faure_point, stream
from .states import cube_to_state


def _add_run_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d-a", type=int, dest="d_a")
    p.add_argument("--d-b", type=int, dest="d_b")
    p.add_argument("--rank-mode", dest="rank_mode", choices=("full", "boundary", "paired"))
    p.add_argument("--total-points", type=int, dest="total_points")
    p.add_argument("--points-per-interval", type=int, dest="points_per_interval")
    p.add_argument("--workers", type=int, dest="workers")
    p.add_argument("--output", dest="output_dir")
    p.add_argument("--sequence-kind", dest="sequence_kind", choices=("faure", "prng"))
    p.add_argument("--prng-seed", type=int, dest="prng_seed")
    p.add_argument(
        "--boundary-stream", dest="boundary_stream", choices=("subset", "independent")
    )


def _overrides(args) -> dict:
    keys = (
        "d_a",
        "d_b",
        "rank_mode",
        "total_points",
        "points_per_interval",
        "workers",
        "output_dir",
        "sequence_kind",
        "prng_seed",
        "boundary_stream",
    )
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_run(args) -> int:
    if args.config:
        cfg = RunConfig.load(args.config, **_overrides(args))
    else:
        ov = _overrides(args)
        if "d_a" not in ov or "d_b" not in ov:
            print("run: need --config or both --d-a and --d-b", file=sys.stderr)
            return 2
        cfg = RunConfig.from_dict(ov)
    summary = runner.run(cfg, progress=not args.quiet)
    print(json.dumps({"config_hash": summary["config_hash"], "output": cfg.output_dir}))
    return 0


def cmd_resume(args) -> int:
    try:
        runner.resume(args.run_dir, workers=args.workers, progress=not args.quiet)
    except CheckpointError as exc:
        print(f"resume: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    rule = None
    if args.edit_window is not None or args.edit_threshold is not None:
        rule = EditRule(
            window=args.edit_window if args.edit_window is not None else 5,
            threshold=args.edit_threshold if args.edit_threshold is not None else 0.5,
        )
    try:
        summary = runner.report(args.run_dir, rule=rule, output_dir=args.output)
    except (OSError, ValueError) as exc:
        print(f"report: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    result = validation.run_validation(
        qmc_points=args.points, oracle_draws=args.oracle_draws
    )
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if result["passed"] else 1


def _sequence_from_args(args) -> SequenceConfig:
    subset = None
    if args.subset:
        subset = tuple(int(c) for c in args.subset.split(","))
    return SequenceConfig(
        dimension=args.dimension,
        base=args.base,
        scrambling=args.scrambling,
        scramble_seed=args.scramble_seed,
        skip=args.skip,
        coordinate_subset=subset,
    )


def cmd_dump_points(args) -> int:
    cfg = _sequence_from_args(args)
    out = open(args.output, "w") if args.output else sys.stdout
    try:
        block = 1 << 14
        for start in range(args.start, args.start + args.count, block):
            n = min(block, args.start + args.count - start)
            for row in stream(cfg, start, n):
                print(",".join(repr(float(x)) for x in row), file=out)
    finally:
        if args.output:
            out.close()
    return 0


def cmd_show_state(args) -> int:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        if args.d_a is None or args.d_b is None:
            print("show-state: need --config or both --d-a and --d-b", file=sys.stderr)
            return 2
        cfg = RunConfig.from_dict({"d_a": args.d_a, "d_b": args.d_b})
    seq = cfg.boundary_sequence() if args.boundary else cfg.full_sequence()
    point = faure_point(seq, args.index)
    rho, spec = cube_to_state(point, cfg.d, rank_deficient=args.boundary)
    print(
        json.dumps(
            {
                "d_a": cfg.d_a,
                "d_b": cfg.d_b,
                "index": args.index,
                "rank_deficient": bool(args.boundary),
                "point": [float(x) for x in point],
                "lambdas": [float(x) for x in spec.lambdas],
                "rho_real": np.real(rho).tolist(),
                "rho_imag": np.imag(rho).tolist(),
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pptratio",
        description=(
            "Weighted quasi-Monte Carlo estimation of PPT/cross-norm "
            "probability ratios for random bipartite density matrices."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a paired full/boundary integration")
    p.add_argument("--config", help="JSON run configuration file")
    p.add_argument("--quiet", action="store_true")
    _add_run_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("run_dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("report", help="edit interval series and emit report files")
    p.add_argument("run_dir")
    p.add_argument("--edit-window", type=int, dest="edit_window")
    p.add_argument("--edit-threshold", type=float, dest="edit_threshold")
    p.add_argument("--output", help="directory for report files (default: run dir)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="run the oracle and property checks")
    p.add_argument("--points", type=int, default=1_000_000)
    p.add_argument("--oracle-draws", type=int, default=1_000_000, dest="oracle_draws")
    p.add_argument("--output", help="write the JSON report here as well")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dump-points", help="write sequence points as CSV")
    p.add_argument("--dimension", type=int, required=True)
    p.add_argument("--base", type=int)
    p.add_argument("--scrambling", choices=("none", "permute"), default="none")
    p.add_argument("--scramble-seed", type=int, default=0, dest="scramble_seed")
    p.add_argument("--skip", type=int, default=0)
    p.add_argument("--subset", help="comma-separated coordinate subset")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_dump_points)

    p = sub.add_parser(
        "show-state", help="print one assembled density matrix as JSON"
    )
    p.add_argument("--config")
    p.add_argument("--d-a", type=int, dest="d_a")
    p.add_argument("--d-b", type=int, dest="d_b")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--boundary", action="store_true")
    p.set_defaults(func=cmd_show_state)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
