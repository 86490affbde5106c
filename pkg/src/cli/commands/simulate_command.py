# src/cli/commands/simulate_command.py
"""simulate: run one scenario, write the trajectory CSV and metrics JSON."""

import argparse
import logging
from pathlib import Path

from src.cli.helpers.context import add_scenario_arguments, effective_config, load_scenario, output_path
from src.domain.errors import ScenarioValidationError
from src.domain.metrics import MetricsCalculator
from src.domain.simulator import Simulator
from src.io.exporter import ReportExporter

logger = logging.getLogger(__name__)


def register(sub, common: argparse.ArgumentParser) -> None:
    parser = sub.add_parser("simulate", parents=[common], help="Integrate a scenario in time")
    add_scenario_arguments(parser)
    parser.add_argument("--band", type=float, help="Settling band relative to max|omega|")
    parser.add_argument("--plot", type=Path, help="Write omega/Vm traces as static HTML")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    parsed = load_scenario(args)
    band = args.band if args.band is not None else parsed.band
    if not band > 0:
        raise ScenarioValidationError(f"--band must be > 0 (got {band})")

    traj = Simulator.run_scenario(parsed.scenario)
    try:
        metrics = MetricsCalculator.compute_metrics(traj, band=band)
    except ValueError as exc:
        raise ScenarioValidationError(f"metrics: {exc}") from exc

    config = effective_config(parsed)
    config["band"] = band
    ReportExporter.write_csv(output_path(args, parsed, "trajectory", ".csv"), traj.to_frame())
    ReportExporter.write_json(
        output_path(args, parsed, "metrics", ".json"),
        {"scenario": parsed.scenario.name, "config": config, "metrics": metrics.to_dict()},
    )
    if args.plot is not None:
        from src.cli.plots import trajectory_figure

        ReportExporter.write_html(args.plot, trajectory_figure(traj, title=parsed.scenario.name))

    print(f"scenario = {parsed.scenario.name}")
    print(f"samples = {len(traj)}")
    for line in metrics.summary_lines():
        print(line)
    return 0
