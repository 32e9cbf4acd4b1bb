import argparse
import sys
from typing import List, Optional

from loguru import logger

from app import __version__
from app.cli.commands import COMMANDS, RunSpec
from app.core.config import settings
from app.core.errors import EXIT_USAGE, KfixError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kfix",
        description="Fixed points by Krasnoselskij iteration, sampled contraction checks and split feasibility.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="What to run")
    parser.add_argument("source", nargs="?", help="Problem JSON file, or the target name for 'reproduce'")
    parser.add_argument("--lambda", dest="lam", type=float, help="Averaging parameter in (0, 1]")
    parser.add_argument("--tol", type=float, help="Stopping tolerance on the step norm")
    parser.add_argument("--max-iters", type=int, help="Iteration budget")
    parser.add_argument("--seed", type=int, help="Seed of the pair sampler (verify)")
    parser.add_argument("--picard", action="store_true", help="Plain Picard iteration (lambda = 1)")
    parser.add_argument("--cycle-window", type=int, help="How many past iterates to scan for a cycle")
    parser.add_argument("--workers", type=int, help="Threads used to check pairs (verify)")
    parser.add_argument("--out", help="Output directory (KFIX_OUT takes precedence)")
    parser.add_argument("--log-level", default=None, help="Log level of the stderr sink")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def configure_logging(level: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or settings.LOG_LEVEL).upper())


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version exit 0, bad arguments exit with argparse's 2
        return EXIT_USAGE if e.code else 0

    try:
        configure_logging(args.log_level)
    except ValueError as e:
        print(f"kfix: invalid log level {args.log_level!r}: {e}", file=sys.stderr)
        return EXIT_USAGE

    spec = RunSpec(
        command=args.command,
        source=args.source,
        output_dir=args.out,
        lam=args.lam,
        tol=args.tol,
        max_iters=args.max_iters,
        seed=args.seed,
        picard=args.picard,
        cycle_window=args.cycle_window,
        workers=args.workers,
    )
    try:
        return COMMANDS[spec.command](spec)
    except KfixError as e:
        logger.error(f"{spec.command} failed: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
