# src/cli/app.py
"""Command-line application: argument parsing, logging setup and dispatch."""

import argparse
import logging
import os
import sys
from typing import List, Optional

from src.domain.errors import NumericalFailure, ScenarioParseError, ScenarioValidationError

logger = logging.getLogger("gridform")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def configure_logging(level: Optional[str] = None) -> None:
    level = (level or os.environ.get("GRIDFORM_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    # Import commands lazily so `--help` stays cheap
    from src.cli.commands import (
        analyze_command,
        compare_command,
        simulate_command,
        sweep_command,
        validate_command,
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", choices=LOG_LEVELS, help="Overrides GRIDFORM_LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="gridform",
        description="Grid-forming converter network simulation and modal analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in (simulate_command, compare_command, analyze_command, sweep_command, validate_command):
        command.register(sub, common)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except ScenarioParseError as exc:
        for line in exc.diagnostics:
            logger.error("parse error: %s", line)
        return EXIT_INPUT
    except ScenarioValidationError as exc:
        for line in exc.diagnostics:
            logger.error("invalid input: %s", line)
        return EXIT_INPUT
    except NumericalFailure as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
