# tests/test_controllers.py
from __future__ import annotations

import numpy as np
import pytest

from src.domain.controllers import (
    ControllerDynamics,
    ControllerFamily,
    DroopParams,
    EquivalentParams,
    MatchingParams,
    ParameterMap,
    VsmParams,
    params_from_mapping,
)
from src.domain.errors import (
    DCLinkCollapse,
    HeterogeneousTuningError,
    ParameterInversionError,
    ScenarioValidationError,
)
from src.domain.models import NodeState
from tests.conftest import droop, matching, vsm


def test_droop_maps_to_equivalent_inertia():
    eq = ParameterMap.map_to_equivalent(DroopParams(R_p=0.05, tau_f=0.1))
    assert eq.M == pytest.approx(2.0)
    assert eq.D == pytest.approx(20.0)


def test_matching_maps_to_equivalent_inertia():
    eq = ParameterMap.map_to_equivalent(MatchingParams(C_dc=0.08, K_theta=0.04, K_dc=0.8))
    assert eq.M == pytest.approx(2.0)
    assert eq.D == pytest.approx(20.0)
    assert eq.time_constant == pytest.approx(0.08 / 0.8)


def test_vsm_map_is_identity():
    eq = ParameterMap.map_to_equivalent(VsmParams(M=2.0, D=20.0))
    assert (eq.M, eq.D) == (2.0, 20.0)


def test_lower_k_theta_means_more_inertia():
    low = ParameterMap.map_to_equivalent(MatchingParams(C_dc=0.08, K_theta=0.02, K_dc=0.8))
    high = ParameterMap.map_to_equivalent(MatchingParams(C_dc=0.08, K_theta=0.04, K_dc=0.8))
    assert low.M == pytest.approx(2.0 * high.M)


def test_reduced_derivatives_agree_across_families():
    s = NodeState(theta=0.1, omega=0.02, Vm=1.01)
    reference = ControllerDynamics.derivative(s, vsm(), 0.3, -0.1)
    for config in (droop(), matching()):
        other = ControllerDynamics.derivative(s, config, 0.3, -0.1)
        for name in ("theta", "omega", "Vm"):
            assert getattr(other, name) == pytest.approx(getattr(reference, name), rel=1e-15, abs=1e-15)


def test_single_node_swing_derivative():
    p = VsmParams(M=2.0, D=20.0, P_star=1.0)
    ds = ControllerDynamics.vsm_reduced_derivative(NodeState(theta=0.0, omega=0.0, Vm=1.0), p, 0.0, 0.0)
    assert ds.omega == pytest.approx(0.5)
    assert ds.Vm == pytest.approx(0.0)


def test_reduced_voltage_and_steady_frequency():
    p = VsmParams(M=2.0, D=20.0, tau_f=0.1, R_q=0.2, P_star=1.0, Q_star=1.0)
    ds = ControllerDynamics.vsm_reduced_derivative(NodeState(theta=0.0, omega=0.0, Vm=1.0), p, 0.0, 0.0)
    assert ds.Vm == pytest.approx(2.0)
    # omega = (P* - P) / D is a fixed point
    ds = ControllerDynamics.vsm_reduced_derivative(NodeState(theta=0.0, omega=0.05, Vm=1.0), p, 0.0, 1.0)
    assert ds.omega == pytest.approx(0.0, abs=1e-15)
    assert ds.Vm == pytest.approx(0.0, abs=1e-15)


def test_vsm_full_initial_rocof():
    p = VsmParams(M=2.0, D=20.0, P_star=1.0)
    ds = ControllerDynamics.vsm_full_derivative(NodeState(theta=0.0, omega=0.0, Q_filt=0.0), p, 0.0, 0.0)
    assert ds.omega == pytest.approx(0.5)
    assert ds.Q_filt == 0.0


def test_droop_full_power_filter():
    p = DroopParams(R_p=0.05, tau_f=0.1)
    ds = ControllerDynamics.droop_full_derivative(NodeState(theta=0.0, P_filt=0.0, Q_filt=0.0), p, 1.0, 0.0)
    assert ds.P_filt == pytest.approx(10.0)
    assert ds.theta == 0.0


def test_matching_full_dc_link_balance():
    p = MatchingParams(C_dc=0.02, K_theta=4.0, K_dc=0.8, i_dc_star=0.5)
    ds = ControllerDynamics.matching_full_derivative(NodeState(theta=0.0, Q_filt=0.0, V_dc=1.0), p, 0.3, 0.0)
    assert ds.V_dc == pytest.approx(10.0)
    assert ds.theta == 0.0

    config = matching(C_dc=0.02, K_theta=4.0, form="full")
    s = ControllerDynamics.outputs(NodeState(theta=0.0, Q_filt=0.0, V_dc=1.01), config)
    assert s.omega == pytest.approx(0.04)

    eq = ControllerDynamics.matching_full_derivative(
        NodeState(theta=0.0, Q_filt=0.0, V_dc=1.0), p, p.V_dc_star * p.i_dc_star, 0.0
    )
    assert eq.V_dc == 0.0


def test_droop_full_frequency_is_algebraic():
    config = droop(form="full")
    s = ControllerDynamics.outputs(NodeState(theta=0.0, P_filt=0.2, Q_filt=0.0), config)
    assert s.omega == pytest.approx(-0.05 * 0.2)


def test_matching_full_collapse_raises():
    config = matching(form="full")
    with pytest.raises(DCLinkCollapse):
        ControllerDynamics.derivative(NodeState(theta=0.0, Q_filt=0.0, V_dc=0.0), config, 0.0, 0.0)


def test_vectorized_evaluation_matches_scalar():
    config = matching(form="full")
    block = np.array(
        [
            [0.0, np.nan, np.nan, np.nan, 0.0, 1.01],
            [0.1, np.nan, np.nan, np.nan, 0.1, 0.98],
        ]
    )
    P = np.array([0.2, -0.1])
    Q = np.array([0.0, 0.05])
    vector = ControllerDynamics.derivative(
        ControllerDynamics.outputs(NodeState.from_array(block), config), config, P, Q
    )
    for i in range(2):
        scalar = ControllerDynamics.derivative(
            ControllerDynamics.outputs(NodeState.from_array(block[i]), config), config, P[i], Q[i]
        )
        assert vector.V_dc[i] == pytest.approx(scalar.V_dc)
        assert vector.theta[i] == pytest.approx(scalar.theta)


def test_initial_state_realizes_omega_override():
    s = ControllerDynamics.initial_state(droop(form="full"), P0=0.0, Q0=0.0, overrides={"omega": 0.01})
    assert s.omega == pytest.approx(0.01)
    s = ControllerDynamics.initial_state(matching(form="full"), P0=0.0, Q0=0.0, overrides={"omega": 0.01})
    assert s.omega == pytest.approx(0.01)
    assert s.V_dc == pytest.approx(1.0 + 0.01 / 0.04)


def test_invert_droop_requires_matching_time_constant():
    target = EquivalentParams(M=2.0, D=20.0, tau_f=0.1)
    assert ParameterMap.invert_equivalent(target, ControllerFamily.DROOP).R_p == pytest.approx(0.05)
    with pytest.raises(ParameterInversionError, match="must equal M/D"):
        ParameterMap.invert_equivalent(target, ControllerFamily.DROOP, {"tau_f": 0.2})
    with pytest.raises(ParameterInversionError, match="must equal M/D"):
        ParameterMap.invert_equivalent(target, ControllerFamily.DROOP, {"tau_f": 0.1 * (1.0 + 1e-10)})


def test_invert_matching_needs_one_free_gain():
    target = EquivalentParams(M=2.0, D=20.0)
    p = ParameterMap.invert_equivalent(target, ControllerFamily.MATCHING, {"C_dc": 0.08})
    assert p.K_theta == pytest.approx(0.04)
    assert p.K_dc == pytest.approx(0.8)
    with pytest.raises(ParameterInversionError, match="underdetermined"):
        ParameterMap.invert_equivalent(target, ControllerFamily.MATCHING, {})
    with pytest.raises(ParameterInversionError, match="overdetermined"):
        ParameterMap.invert_equivalent(target, ControllerFamily.MATCHING, {"C_dc": 0.08, "K_theta": 0.04})


def test_inversion_round_trips():
    target = EquivalentParams(M=1.5, D=7.5, tau_f=0.2)
    for family, fixed in (("vsm", None), ("droop", None), ("matching", {"K_theta": 0.3, "V_dc_star": 1.2})):
        native = ParameterMap.invert_equivalent(target, family, fixed)
        eq = ParameterMap.map_to_equivalent(native)
        assert eq.M == pytest.approx(1.5, rel=1e-12)
        assert eq.D == pytest.approx(7.5, rel=1e-12)


def test_common_equivalent_rejects_heterogeneous_nodes():
    with pytest.raises(HeterogeneousTuningError, match="tuned identically"):
        ParameterMap.common_equivalent([vsm(M=1.0, D=3.0), vsm(M=2.0, D=3.0)])
    eq = ParameterMap.common_equivalent([vsm(), droop(), matching()])
    assert eq.M == pytest.approx(2.0)


def test_with_param_checks_family():
    assert ParameterMap.with_param(vsm(), "d", 5.0).params.D == 5.0
    with pytest.raises(ScenarioValidationError, match="does not apply"):
        ParameterMap.with_param(vsm(), "K_theta", 0.1)


def test_params_from_mapping_reports_problems():
    with pytest.raises(ScenarioValidationError) as exc:
        params_from_mapping("droop", {"tau_p": 0.1, "R_p": 0.05})
    assert "use tau_f" in exc.value.diagnostics[0]
    with pytest.raises(ScenarioValidationError) as exc:
        params_from_mapping("vsm", {"M": 1.0})
    assert exc.value.diagnostics == ["D: required"]
    with pytest.raises(ScenarioValidationError, match="M must be > 0"):
        params_from_mapping("vsm", {"M": -1.0, "D": 1.0})
