#!/usr/bin/env python3
"""
Command-line runner for QROM advice lab experiments.

    qrom list
    qrom run --config configs/altmeas_sweep.json [--seed 7] [--out results] [--threads 4]
    qrom bound --which owf --s 4 --t 2 --n 1024 --m 1024 --c 1
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from qrom_lib.bounds import Application, application_bound  # noqa: E402
from qrom_lib.config import get_settings  # noqa: E402
from qrom_lib.errors import QromError  # noqa: E402
from qrom_lib.experiments import list_experiments, load_config, run_experiment  # noqa: E402

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrom", description=__doc__.splitlines()[1])
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("list", help="List registered experiments")

    run = commands.add_parser("run", help="Run an experiment config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--seed", type=int, help="Override the config seed")
    run.add_argument("--out", help="Output directory or s3://bucket/prefix")
    run.add_argument("--threads", type=int, help="Worker threads for per-oracle work")

    bound = commands.add_parser("bound", help="Evaluate one closed-form bound")
    bound.add_argument("--which", required=True, choices=[a.value for a in Application])
    bound.add_argument("--s", type=int)
    bound.add_argument("--t", type=int)
    bound.add_argument("--n", type=int)
    bound.add_argument("--m", type=int)
    bound.add_argument("--k", type=int, help="Salt space size")
    bound.add_argument("--nu", type=float, help="Numeric nu for salted/classical bounds")
    bound.add_argument("--t-samp", dest="t_samp", type=int)
    bound.add_argument("--t-verify", dest="t_verify", type=int)
    bound.add_argument("--c", type=float, default=1.0, help="Constant replacing every O(.)")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    settings = replace(get_settings(), threads=args.threads) if args.threads else None
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output = args.out
    outcome = run_experiment(cfg, settings)
    for path in outcome.paths:
        print(path)
    return outcome.exit_code


def cmd_bound(args: argparse.Namespace) -> int:
    params = {
        name: getattr(args, name)
        for name in ("s", "t", "n", "m", "k", "nu", "t_samp", "t_verify")
    }
    report = application_bound(args.which, params, args.c)
    row = report.to_row()
    print(",".join(row))
    print(",".join(str(v) for v in row.values()))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.command == "list":
            print(list_experiments())
            return 0
        if args.command == "run":
            return cmd_run(args)
        return cmd_bound(args)
    except QromError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return QromError.exit_code


if __name__ == "__main__":
    sys.exit(main())
