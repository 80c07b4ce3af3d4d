"""Command line driver for the calibration pipeline.

Subcommands mirror the stages: collect, train, fine, bench, debride, plus
`all` for the full run.  Exit codes: 0 success, 1 usage or configuration
problem, 2 missing upstream artifact, 3 numeric failure during training.
"""
from __future__ import annotations

import argparse
import sys

from .persist import PersistError
from .pipeline import MissingArtifactError, run_stage
from .scenario import ConfigError, ScenarioConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="calibench",
                     description="Simulated coarse-to-fine arm calibration pipeline")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, text in (("collect", "run coarse data collection and cleaning"),
                       ("train", "fit the coarse model (and rigid baseline, optional sweep)"),
                       ("fine", "collect grid residuals and fit the per-yaw forests"),
                       ("bench", "run the calibration-grid benchmark table"),
                       ("debride", "run the fragment-removal trials"),
                       ("all", "run every stage in order")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="scenario config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out-dir", help="artifact directory (default from config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        print("error: a command is required (collect|train|fine|bench|debride|all)",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            cfg.master_seed = args.seed
        cfg.validate()
        out_dir = args.out_dir if args.out_dir else cfg.out_dir
        run_stage(args.command, cfg, out_dir, quiet=args.quiet)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PersistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
