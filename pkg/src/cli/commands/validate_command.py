# src/cli/commands/validate_command.py
"""validate: schema and graph diagnostics without running anything."""

import argparse
import logging

from src.cli.helpers.context import add_scenario_arguments, load_scenario
from src.domain.errors import HeterogeneousTuningError
from src.domain.network_model import NetworkModel
from src.domain.spectral import SpectralAnalyzer

logger = logging.getLogger(__name__)


def register(sub, common: argparse.ArgumentParser) -> None:
    parser = sub.add_parser("validate", parents=[common], help="Check a scenario file")
    add_scenario_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    parsed = load_scenario(args)
    sc = parsed.scenario
    diagnostics = sc.validate()
    for line in diagnostics:
        print(f"error: {line}")
    if diagnostics:
        return 2

    for line in parsed.warnings:
        print(f"warning: {line}")

    labels = sorted(set(c.label for c in sc.controllers))
    print(f"OK {parsed.source}")
    print(f"nodes = {sc.n}, edges = {len(sc.graph.edges)}, controllers = {', '.join(labels)}")
    print(f"dt = {sc.dt:g}, t_end = {sc.t_end:g}, steps = {sc.steps}, flow_model = {sc.flow_model.value}")
    try:
        params = SpectralAnalyzer.common_tuning(sc.controllers)
        print(f"identical tuning: M = {params.M:g}, D = {params.D:g}, tau_f = {params.tau_f:g}")
    except HeterogeneousTuningError as exc:
        print(f"heterogeneous tuning ({exc.diagnostics[0]}); analyze and sweep are unavailable")
    if sc.graph.edges:
        print(f"dc/ac jacobian deviation = {NetworkModel.dc_jacobian_check(sc.graph):.3e}")
    return 0
