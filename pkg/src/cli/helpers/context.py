# src/cli/helpers/context.py
"""Shared scenario loading, CLI overrides and output paths."""

import argparse
from pathlib import Path
from typing import Dict, Optional

from src.domain.models import FlowModel
from src.io.scenario_parser import ParsedScenario, ScenarioParser


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", type=Path, help="Scenario JSON file")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="Reject unknown keys (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="Drop unknown keys with a warning")
    parser.add_argument("--dt", type=float, help="Override simulation.dt (s)")
    parser.add_argument("--t-end", dest="t_end", type=float, help="Override simulation.t_end (s)")
    parser.add_argument("--decimate", type=int, help="Record every k-th step")
    parser.add_argument("--flow-model", dest="flow_model", choices=[f.value for f in FlowModel],
                        help="Override simulation.flow_model")
    parser.add_argument("--out", type=Path, help="Directory for output files")


def load_scenario(args: argparse.Namespace) -> ParsedScenario:
    """Parse the scenario file and apply command-line overrides."""
    parsed = ScenarioParser.load(args.scenario, strict=args.strict)
    parsed.scenario = parsed.scenario.with_overrides(
        dt=getattr(args, "dt", None),
        t_end=getattr(args, "t_end", None),
        decimation=getattr(args, "decimate", None),
        flow_model=FlowModel(args.flow_model) if getattr(args, "flow_model", None) else None,
    )
    return parsed


def effective_config(parsed: ParsedScenario, tol: Optional[float] = None) -> Dict:
    """Settings actually used for the run, echoed into every report."""
    sc = parsed.scenario
    return {
        "source": parsed.source,
        "nodes": sc.n,
        "dt": sc.dt,
        "t_end": sc.t_end,
        "decimation": sc.decimation,
        "flow_model": sc.flow_model.value,
        "band": parsed.band,
        "tol": parsed.tol if tol is None else tol,
    }


def output_path(args: argparse.Namespace, parsed: ParsedScenario, key: str, suffix: str) -> Path:
    """outputs.<key> from the file, else '<name>.<key><suffix>'; --out replaces the directory."""
    configured = getattr(parsed.schema.outputs, key)
    path = Path(configured) if configured else Path(f"{parsed.scenario.name}.{key}{suffix}")
    if args.out is not None:
        path = Path(args.out) / path.name
    return path
