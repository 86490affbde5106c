# src/cli/commands/analyze_command.py
"""analyze: modes of the linearized network for an identically tuned scenario."""

import argparse
import logging
from pathlib import Path
from typing import Dict

import numpy as np

from src.cli.helpers.context import add_scenario_arguments, effective_config, load_scenario, output_path
from src.domain.network_model import NetworkModel
from src.domain.spectral import NetworkAnalysis, SpectralAnalyzer
from src.io.exporter import ReportExporter, to_jsonable
from src.io.schema import AnalysisReportSchema

logger = logging.getLogger(__name__)


def register(sub, common: argparse.ArgumentParser) -> None:
    parser = sub.add_parser("analyze", parents=[common], help="Closed-form and numeric mode analysis")
    add_scenario_arguments(parser)
    parser.add_argument("--tol", type=float, default=1e-9, help="Mode residual tolerance")
    parser.add_argument("--plot", type=Path, help="Write the mode map as static HTML")
    parser.set_defaults(handler=run)


def build_report(name: str, config: Dict, analysis: NetworkAnalysis) -> Dict:
    residuals = analysis.residuals
    report = {
        "scenario": name,
        "config": config,
        "lambdas": analysis.lambdas,
        "modes": [mode.to_dict() for mode in analysis.modes.modes],
        "residuals": {
            "passed": residuals.passed,
            "tol": residuals.tol,
            "max_residual": residuals.max_residual,
            "failing": residuals.describe_failures(),
        },
        "tuning": analysis.tuning.to_dict(),
        "voltage_modes": analysis.voltage_modes.etas,
        "steady_state": None,
    }
    if analysis.steady_state is not None:
        ss = analysis.steady_state
        report["steady_state"] = {
            "omega_ss": ss.omega_ss,
            "theta": ss.theta,
            "delta_theta": ss.delta_theta,
            "theta_avg_ramp_rate": ss.theta_avg_ramp_rate,
        }
    report = to_jsonable(report)
    # Round-trip through the schema so every emitted report is valid.
    return AnalysisReportSchema.model_validate(report).model_dump()


def render_text(analysis: NetworkAnalysis) -> str:
    lines = [f"{'eta':>28}  {'lambda':>10}  classification"]
    for mode in analysis.modes.modes:
        eta = f"{mode.eta.real:.6g}{mode.eta.imag:+.6g}j"
        lines.append(f"{eta:>28}  {mode.source_lambda:>10.6g}  {mode.classification}")
    t = analysis.tuning
    lines += [
        "",
        f"eta2 = {t.eta2.eta.real:.6g}{t.eta2.eta.imag:+.6g}j",
        f"regime = {t.regime} (d = {t.d:.6g}, d_crit = {t.d_crit:.6g})",
        f"rocof_per_unit_step = {t.rocof_per_unit_step:.6g}",
        "voltage_modes = " + ", ".join(f"{v:.6g}" for v in analysis.voltage_modes.etas),
        f"mode residuals: {'PASS' if analysis.residuals.passed else 'FAIL'} "
        f"(max {analysis.residuals.max_residual:.3e})",
    ]
    if analysis.steady_state is not None:
        ss = analysis.steady_state
        lines.append(f"omega_ss = {ss.omega_ss:.6g}")
        lines.append("theta_ss = " + ", ".join(f"{v:.6g}" for v in ss.theta))
    return "\n".join(lines)


def run(args: argparse.Namespace) -> int:
    parsed = load_scenario(args)
    scenario = parsed.scenario

    params = SpectralAnalyzer.common_tuning(scenario.controllers)
    lap = NetworkModel.build_laplacian(scenario.graph)
    # Disturbances are extractions; the linear model takes injections.
    P_d = -scenario.final_disturbance()
    analysis = SpectralAnalyzer.analyze(lap, params, P_d=P_d if np.any(P_d) else None, tol=args.tol)

    config = effective_config(parsed)
    config.update({"M": params.M, "D": params.D, "tau_f": params.tau_f, "R_q": params.R_q})
    report = build_report(scenario.name, config, analysis)
    ReportExporter.write_json(output_path(args, parsed, "report", ".json"), report)
    if args.plot is not None:
        from src.cli.plots import mode_figure

        ReportExporter.write_html(args.plot, mode_figure(analysis.modes, title=scenario.name))

    print(render_text(analysis))
    return 0
