"""Command-line entry point: ``tfdinv <subcommand> [--config PATH] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .harness import EXIT_CONFIG, OUT_ENV, SUBCOMMANDS, default_out_dir, run_subcommand


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfdinv",
        description="Time-fractional diffusion: forward solves, identity checks and source reconstruction.",
        epilog=f"The default output directory is taken from ${OUT_ENV} (fallback: ./results).",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="INI config file (defaults apply when omitted)")
    parser.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    parser.add_argument("--workers", type=int, help="worker threads for sweep tasks")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if args.workers is not None and args.workers < 1:
        logging.getLogger("tfdinv").error("config error: --workers must be positive")
        return EXIT_CONFIG
    out = args.out if args.out else default_out_dir()
    status, bundle = run_subcommand(args.subcommand, args.config, out, args.workers)
    if bundle is not None and args.verbose:
        logging.getLogger("tfdinv").info("wrote %s outputs to %s (config %s)", args.subcommand, out, bundle.config_hash[:12])
    return status


if __name__ == "__main__":
    sys.exit(main())
