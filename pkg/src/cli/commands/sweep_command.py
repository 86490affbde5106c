# src/cli/commands/sweep_command.py
"""sweep: vary one controller parameter and tabulate equivalent tuning, modes and metrics."""

import argparse
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Dict, List

import numpy as np
import pandas as pd

from src.cli.helpers.context import add_scenario_arguments, effective_config, load_scenario, output_path
from src.domain.controllers import SWEEPABLE, ParameterMap
from src.domain.errors import ScenarioValidationError
from src.domain.metrics import MIN_SAMPLES, MetricsCalculator
from src.domain.network_model import NetworkModel
from src.domain.simulator import Scenario, Simulator
from src.domain.spectral import SpectralAnalyzer
from src.io.exporter import ReportExporter

logger = logging.getLogger(__name__)

COLUMNS = [
    "param", "value", "M", "D", "eta2_real", "eta2_imag",
    "regime", "oscillatory", "rocof_max", "settling_time",
]


def register(sub, common: argparse.ArgumentParser) -> None:
    parser = sub.add_parser("sweep", parents=[common], help="Parameter sweep over one controller gain")
    add_scenario_arguments(parser)
    parser.add_argument("--param", required=True, choices=sorted(SWEEPABLE))
    points = parser.add_mutually_exclusive_group(required=True)
    points.add_argument("--values", help="Comma-separated values, e.g. 1,2.8284,5")
    points.add_argument("--range", dest="range_", metavar="START:STOP:NUM",
                        help="NUM evenly spaced values, both ends included")
    parser.add_argument("--band", type=float, help="Settling band relative to max|omega|")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    parser.set_defaults(handler=run)


def parse_points(values: str = None, range_: str = None) -> List[float]:
    try:
        if values is not None:
            points = [float(v) for v in values.split(",") if v.strip()]
        else:
            start, stop, num = range_.split(":")
            points = list(np.linspace(float(start), float(stop), int(num)))
    except ValueError as exc:
        raise ScenarioValidationError(f"sweep points: cannot parse ({exc})") from exc
    if not points:
        raise ScenarioValidationError("sweep points: range is empty")
    return [float(v) for v in points]


def evaluate_point(param: str, value: float, scenario: Scenario, band: float) -> Dict:
    """One sweep row. Module-level so worker processes can import it."""
    params = SpectralAnalyzer.common_tuning(scenario.controllers)
    lap = NetworkModel.build_laplacian(scenario.graph)
    tuning = SpectralAnalyzer.tuning_report(lap, params.M, params.D)
    metrics = MetricsCalculator.compute_metrics(Simulator.run_scenario(scenario), band=band)
    settling = math.nan if metrics.unsettled.any() else float(np.max(metrics.settling_time))
    return {
        "param": param,
        "value": value,
        "M": params.M,
        "D": params.D,
        "eta2_real": tuning.eta2.eta.real,
        "eta2_imag": tuning.eta2.eta.imag,
        "regime": tuning.regime,
        "oscillatory": tuning.oscillatory,
        "rocof_max": float(np.max(metrics.rocof_max)),
        "settling_time": settling,
    }


def run(args: argparse.Namespace) -> int:
    points = parse_points(args.values, args.range_)
    if args.jobs < 1:
        raise ScenarioValidationError(f"--jobs must be >= 1 (got {args.jobs})")
    parsed = load_scenario(args)
    band = args.band if args.band is not None else parsed.band
    if not band > 0:
        raise ScenarioValidationError(f"--band must be > 0 (got {band})")
    base = parsed.scenario
    if base.samples < MIN_SAMPLES:
        raise ScenarioValidationError(
            f"metrics: trajectory would hold {base.samples} samples, at least {MIN_SAMPLES} are needed "
            f"(raise t_end or lower --decimate)"
        )

    # Build and validate every point before running any of them.
    scenarios = []
    for value in points:
        configs = tuple(ParameterMap.with_param(c, args.param, value) for c in base.controllers)
        diagnostics = [f"{args.param}={value:g}: controllers[{i}].{d}"
                       for i, c in enumerate(configs) for d in c.params.validate()]
        if diagnostics:
            raise ScenarioValidationError(diagnostics)
        scenarios.append(replace(base, controllers=configs, name=f"{base.name}[{args.param}={value:g}]"))
    SpectralAnalyzer.common_tuning(base.controllers)

    logger.info("Sweeping %s over %d points with %d job(s)", args.param, len(points), args.jobs)
    jobs = [(args.param, value, sc, band) for value, sc in zip(points, scenarios)]
    if args.jobs == 1:
        rows = [evaluate_point(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(evaluate_point, *zip(*jobs)))

    table = pd.DataFrame(rows, columns=COLUMNS)
    ReportExporter.write_csv(output_path(args, parsed, "sweep", ".csv"), table)
    print(table.to_string(index=False))
    logger.debug("Sweep config: %s", effective_config(parsed))
    return 0
