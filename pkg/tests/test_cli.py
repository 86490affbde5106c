# tests/test_cli.py
from __future__ import annotations

import json

import pandas as pd
import pytest

from src.cli.app import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from src.domain.simulator import CSV_COLUMNS
from src.io.schema import AnalysisReportSchema


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_writes_trajectory_and_metrics(tmp_path, capsys, scenario_path):
    code, out, _ = run(capsys, "simulate", scenario_path("trivial"), "--out", tmp_path)
    assert code == EXIT_OK
    lines = (tmp_path / "trivial.trajectory.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 101 * 2

    metrics = json.loads((tmp_path / "trivial.metrics.json").read_text())
    assert metrics["scenario"] == "trivial"
    assert metrics["config"]["dt"] == pytest.approx(0.01)
    assert metrics["metrics"]["rocof_max"] == [0.0, 0.0]
    assert "omega_avg_final = 0" in out


def test_simulate_with_paper_flow_model(tmp_path, capsys, scenario_path):
    code, _, _ = run(capsys, "simulate", scenario_path("trivial"), "--flow-model", "ac-paper", "--out", tmp_path)
    assert code == EXIT_OK
    metrics = json.loads((tmp_path / "trivial.metrics.json").read_text())
    assert metrics["config"]["flow_model"] == "ac-paper"


def test_simulate_plot(tmp_path, capsys, scenario_path):
    plot = tmp_path / "trivial.html"
    code, _, _ = run(capsys, "simulate", scenario_path("ring4_step"), "--out", tmp_path, "--plot", plot)
    assert code == EXIT_OK
    assert "plotly" in plot.read_text()


def test_zero_dt_override_is_rejected(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "simulate", scenario_path("trivial"), "--dt", 0, "--out", tmp_path)
    assert code == EXIT_INPUT
    assert "dt must be > 0" in err
    assert not (tmp_path / "trivial.trajectory.csv").exists()


def test_nonpositive_band_is_rejected(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "simulate", scenario_path("trivial"), "--band", 0, "--out", tmp_path)
    assert code == EXIT_INPUT
    assert "--band must be > 0" in err


def test_missing_scenario_file(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", tmp_path / "nope.json")
    assert code == EXIT_INPUT
    assert "parse error" in err


def test_unknown_subcommand(capsys):
    code, _, _ = run(capsys, "integrate")
    assert code == EXIT_INPUT


def test_dc_link_collapse_exit_code(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "simulate", scenario_path("matching_collapse"), "--out", tmp_path)
    assert code == EXIT_NUMERIC
    assert "DC link collapse at t=" in err


def test_compare_reduced_families_agree(tmp_path, capsys, scenario_path):
    code, out, _ = run(
        capsys, "compare", scenario_path("ring4_step"), "--families", "vsm:reduced", "droop:reduced",
        "--out", tmp_path,
    )
    assert code == EXIT_OK
    report = json.loads((tmp_path / "ring4_step.compare.json").read_text())
    assert report["variants"] == ["vsm:reduced", "droop:reduced"]
    assert report["pairs"][0]["verdict"] == "PASS"
    assert report["target"]["M"] == pytest.approx(2.0)
    assert "PASS" in out


def test_compare_full_form_fails_tolerance_but_exits_ok(tmp_path, capsys, scenario_path):
    code, _, _ = run(
        capsys, "compare", scenario_path("ring4_step"), "--families", "vsm:reduced", "matching:full",
        "--out", tmp_path,
    )
    assert code == EXIT_OK
    pair = json.loads((tmp_path / "ring4_step.compare.json").read_text())["pairs"][0]
    assert pair["verdict"] == "FAIL"
    assert pair["max_deviation"] > pair["tol"]


def test_compare_default_families(tmp_path, capsys, scenario_path):
    code, _, _ = run(capsys, "compare", scenario_path("ring4_step"), "--out", tmp_path)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "ring4_step.compare.json").read_text())
    assert len(report["pairs"]) == 3
    assert all(pair["verdict"] == "PASS" for pair in report["pairs"])


def test_compare_needs_a_family(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "compare", scenario_path("ring4_step"), "--families", "--out", tmp_path)
    assert code == EXIT_INPUT
    assert "--families" in err


def test_compare_rejects_unknown_family(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "compare", scenario_path("ring4_step"), "--families", "pll:full", "--out", tmp_path)
    assert code == EXIT_INPUT
    assert "pll:full" in err


def test_analyze_two_node(tmp_path, capsys, scenario_path):
    code, out, _ = run(capsys, "analyze", scenario_path("two_node_analyze"), "--out", tmp_path)
    assert code == EXIT_OK
    data = json.loads((tmp_path / "two_node_analyze.report.json").read_text())
    report = AnalysisReportSchema.model_validate(data)
    assert sorted(mode.real for mode in report.modes) == pytest.approx([-3.0, -2.0, -1.0, 0.0])
    assert report.residuals.passed
    assert report.tuning.regime == "overdamped"
    assert sorted(report.voltage_modes) == pytest.approx([-14.0, -10.0])
    assert report.steady_state.omega_ss == pytest.approx(1.0 / 6.0)
    assert "regime = overdamped" in out


def test_analyze_heterogeneous_tuning(tmp_path, capsys, scenario_path):
    code, _, err = run(capsys, "analyze", scenario_path("heterogeneous"), "--out", tmp_path)
    assert code == EXIT_INPUT
    assert "tuned identically" in err


def test_sweep_damping_regimes(tmp_path, capsys, scenario_path):
    code, _, _ = run(
        capsys, "sweep", scenario_path("two_node_sweep"), "--param", "d", "--values", "1,2.8284,5",
        "--out", tmp_path,
    )
    assert code == EXIT_OK
    table = pd.read_csv(tmp_path / "two_node_sweep.sweep.csv")
    assert list(table["regime"]) == ["oscillatory", "critical", "overdamped"]
    assert list(table["D"]) == pytest.approx([1.0, 2.8284, 5.0])
    assert table.loc[0, "eta2_imag"] > 0
    assert table.loc[2, "eta2_imag"] == 0


def test_sweep_matching_inertia_scales_inversely(tmp_path, capsys, scenario_path):
    code, _, _ = run(
        capsys, "sweep", scenario_path("matching_ring4"), "--param", "K_theta", "--range", "0.02:0.08:2",
        "--t-end", 0.5, "--out", tmp_path,
    )
    assert code == EXIT_OK
    table = pd.read_csv(tmp_path / "matching_ring4.sweep.csv")
    assert list(table["M"]) == pytest.approx([4.0, 1.0])


def test_sweep_empty_range(tmp_path, capsys, scenario_path):
    code, _, err = run(
        capsys, "sweep", scenario_path("two_node_sweep"), "--param", "d", "--range", "0:1:0", "--out", tmp_path,
    )
    assert code == EXIT_INPUT
    assert "empty" in err


def test_sweep_rejects_too_short_trajectories(tmp_path, capsys, scenario_path):
    for extra in (("--t-end", 0.01), ("--decimate", 300)):
        code, _, err = run(
            capsys, "sweep", scenario_path("two_node_sweep"), "--param", "d", "--values", "1,5",
            *extra, "--out", tmp_path,
        )
        assert code == EXIT_INPUT
        assert "at least 3 are needed" in err
    assert not (tmp_path / "two_node_sweep.sweep.csv").exists()


def test_sweep_parameter_must_fit_family(tmp_path, capsys, scenario_path):
    code, _, err = run(
        capsys, "sweep", scenario_path("two_node_sweep"), "--param", "K_theta", "--values", "0.1", "--out", tmp_path,
    )
    assert code == EXIT_INPUT
    assert "does not apply" in err


def test_validate_ok(capsys, scenario_path):
    code, out, _ = run(capsys, "validate", scenario_path("ring4_step"))
    assert code == EXIT_OK
    assert out.startswith("OK ")
    assert "identical tuning: M = 2, D = 20" in out


def test_validate_reports_heterogeneous_tuning(capsys, scenario_path):
    code, out, _ = run(capsys, "validate", scenario_path("heterogeneous"))
    assert code == EXIT_OK
    assert "heterogeneous tuning" in out


def test_lenient_mode_warns(tmp_path, capsys):
    doc = {
        "network": {"nodes": 2, "edges": [{"k": 0, "l": 1, "B": 1.0}]},
        "controllers": {"default": {"family": "vsm", "params": {"M": 2.0, "D": 20.0}}},
        "simulation": {"dt": 0.01, "t_end": 0.1, "solver": "rk45"},
    }
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))

    code, _, err = run(capsys, "validate", path)
    assert code == EXIT_INPUT
    assert "simulation.solver" in err

    code, out, err = run(capsys, "validate", path, "--lenient")
    assert code == EXIT_OK
    assert "warning: ignoring unknown key simulation.solver" in out


def test_outputs_are_byte_stable(tmp_path, capsys, scenario_path):
    for name in ("a", "b"):
        assert run(capsys, "simulate", scenario_path("ring4_step"), "--out", tmp_path / name)[0] == EXIT_OK
    for filename in ("ring4_step.trajectory.csv", "ring4_step.metrics.json"):
        assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()
