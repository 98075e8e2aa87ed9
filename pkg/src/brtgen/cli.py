"""Command-line entry points.

    brtgen pipeline --config cfg.json [--bug ID] [--jobs K] [--force]
    brtgen stage <prompt|generate|inject|execute|rank|evaluate> --config cfg.json

Exit codes: 0 all bugs processed, 2 configuration error, 3 some bugs
errored (summary on stderr).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import BrtError, ConfigError
from .pipeline import STAGE_NAMES, load_pipeline_config, run_pipeline, run_single_stage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _parse_thr(value: str) -> range | int:
    if ".." in value:
        low, high = value.split("..", 1)
        return range(int(low), int(high) + 1)
    return int(value)


def _parse_n_values(value: str) -> list[int]:
    return [int(part) for part in value.split(",") if part.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--bug", help="restrict to one bug id")
    parser.add_argument("--force", action="store_true",
                        help="recompute stages even when their files exist")
    parser.add_argument("--provider", help="override the generation provider id")
    parser.add_argument("--thr", type=_parse_thr,
                        help="selection threshold, or a sweep range like 0..10")
    parser.add_argument("--n", type=_parse_n_values,
                        help="comma-separated n values for acc@n/wef@n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brtgen",
        description="Generate, execute, and rank candidate bug-reproducing tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pipe = sub.add_parser("pipeline", help="run every stage end to end")
    _add_common(pipe)
    pipe.add_argument("--jobs", type=int, default=1, help="bug-level parallelism")

    stage = sub.add_parser("stage", help="run exactly one stage")
    stage.add_argument("stage", choices=STAGE_NAMES)
    _add_common(stage)

    return parser


def _load_config(args):
    config = load_pipeline_config(args.config)
    if args.provider:
        config.generation.provider_id = args.provider
    if isinstance(args.thr, int):
        config.selection_thr = args.thr
    if args.n:
        config.eval_n_values = args.n
    return config


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    try:
        config = _load_config(args)
    except BrtError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "pipeline":
            code, errors = run_pipeline(
                config, bug_id=args.bug, jobs=args.jobs, force=args.force
            )
        else:
            thr_range = args.thr if isinstance(args.thr, range) else None
            code, errors = run_single_stage(
                config,
                args.stage,
                bug_id=args.bug,
                force=args.force,
                thr_range=thr_range,
                n_values=args.n,
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for bug_id, message in sorted(errors.items()):
        print(f"error: {bug_id}: {message}", file=sys.stderr)
    if errors:
        print(f"{len(errors)} bug(s) errored", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
