# src/cli/commands/compare_command.py
"""compare: run one scenario under several controller families realizing the same (M, D)."""

import argparse
import itertools
import logging
from dataclasses import replace
from typing import List, Tuple

import pandas as pd

from src.cli.helpers.context import add_scenario_arguments, effective_config, load_scenario, output_path
from src.domain.controllers import ControllerConfig, ControllerFamily, ControllerForm, ParameterMap
from src.domain.errors import ScenarioValidationError
from src.domain.metrics import MetricsCalculator
from src.domain.simulator import Simulator
from src.io.exporter import ReportExporter

logger = logging.getLogger(__name__)

DEFAULT_FAMILIES = ["vsm:reduced", "droop:reduced", "matching:reduced"]


def register(sub, common: argparse.ArgumentParser) -> None:
    parser = sub.add_parser("compare", parents=[common], help="Pairwise trajectory deviations across families")
    add_scenario_arguments(parser)
    parser.add_argument(
        "--families",
        nargs="*",
        default=None,
        metavar="FAMILY:FORM",
        help="e.g. vsm:reduced droop:reduced matching:full (default: the three reduced forms)",
    )
    parser.add_argument("--tol", type=float, help="PASS/FAIL tolerance on the max deviation")
    parser.set_defaults(handler=run)


def parse_families(items: List[str]) -> List[Tuple[ControllerFamily, ControllerForm]]:
    if not items:
        raise ScenarioValidationError("--families: at least one FAMILY:FORM is required")
    out, diagnostics = [], []
    for item in items:
        family, _, form = item.partition(":")
        try:
            out.append((ControllerFamily(family), ControllerForm(form or "reduced")))
        except ValueError:
            diagnostics.append(
                f"--families: '{item}' is not one of vsm|droop|matching : full|reduced"
            )
    if diagnostics:
        raise ScenarioValidationError(diagnostics)
    return out


def run(args: argparse.Namespace) -> int:
    families = parse_families(DEFAULT_FAMILIES if args.families is None else args.families)
    parsed = load_scenario(args)
    tol = args.tol if args.tol is not None else parsed.tol
    scenario = parsed.scenario

    target = ParameterMap.common_equivalent(scenario.controllers)
    fixed = parsed.schema.compare.fixed
    logger.info("Comparing %d variants at M=%g, D=%g", len(families), target.M, target.D)

    runs = []
    for family, form in families:
        params = ParameterMap.invert_equivalent(target, family, fixed.get(family))
        config = ControllerConfig(family=family, form=form, params=params)
        variant = replace(scenario, controllers=(config,) * scenario.n, name=f"{scenario.name}[{config.label}]")
        runs.append((config.label, Simulator.run_scenario(variant)))

    reports = [
        MetricsCalculator.compare_trajectories(a, b, tol=tol)
        for (_, a), (_, b) in itertools.combinations(runs, 2)
    ]

    rows = [
        {
            "a": r.label_a,
            "b": r.label_b,
            **{f"max_{name}": value for name, value in r.deviations.items()},
            "max_deviation": r.max_deviation,
            "verdict": r.verdict,
        }
        for r in reports
    ]
    ReportExporter.write_json(
        output_path(args, parsed, "compare", ".json"),
        {
            "scenario": scenario.name,
            "config": effective_config(parsed, tol=tol),
            "target": {"M": target.M, "D": target.D, "tau_f": target.tau_f, "R_q": target.R_q},
            "variants": [label for label, _ in runs],
            "pairs": [r.to_dict() for r in reports],
        },
    )

    if rows:
        print(pd.DataFrame(rows).to_string(index=False))
    else:
        print("single variant: nothing to compare")
    print(f"tol = {tol:g}")
    return 0
