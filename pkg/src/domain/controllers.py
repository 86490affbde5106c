# src/domain/controllers.py
"""Grid-forming controller dynamics (VSM, droop, matching) and the equivalent (M, D) map."""

import logging
import math
from dataclasses import MISSING, dataclass, fields, replace
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.domain.errors import (
    DCLinkCollapse,
    HeterogeneousTuningError,
    ParameterInversionError,
    ScenarioValidationError,
)
from src.domain.models import ABSENT, FloatLike, NodeState

logger = logging.getLogger(__name__)

# Relative tolerance for "identically tuned" nodes.
TUNING_RTOL = 1e-9
# Inverted gains must map back onto the target (M, D) to this relative tolerance.
INVERSION_RTOL = 1e-12


class ControllerFamily(str, Enum):
    VSM = "vsm"
    DROOP = "droop"
    MATCHING = "matching"


class ControllerForm(str, Enum):
    FULL = "full"  # filter / DC-link states, omega and Vm algebraic where the law says so
    REDUCED = "reduced"  # (theta, omega, Vm) swing form


@dataclass(frozen=True)
class VsmParams:
    M: float
    D: float
    tau_f: float = 0.1
    R_q: float = 0.0
    P_star: float = 0.0
    Q_star: float = 0.0
    Vm_star: float = 1.0
    # Full form only: keep the active-power measurement filter instead of P~ = P.
    active_filter: bool = False

    def validate(self) -> List[str]:
        out = []
        if not self.M > 0:
            out.append(f"M must be > 0 (got {self.M})")
        if not self.D > 0:
            out.append(f"D must be > 0 (got {self.D})")
        return out + _common_checks(self)


@dataclass(frozen=True)
class DroopParams:
    R_p: float
    tau_f: float = 0.1  # shared by the P and Q filters
    R_q: float = 0.0
    P_star: float = 0.0
    Q_star: float = 0.0
    Vm_star: float = 1.0

    def validate(self) -> List[str]:
        out = []
        if not self.R_p > 0:
            out.append(f"R_p must be > 0 (got {self.R_p})")
        return out + _common_checks(self)


@dataclass(frozen=True)
class MatchingParams:
    C_dc: float
    K_theta: float
    K_dc: float
    V_dc_star: float = 1.0
    i_dc_star: float = 0.0
    tau_f: float = 0.1
    R_q: float = 0.0
    Q_star: float = 0.0
    Vm_star: float = 1.0

    @property
    def P_star(self) -> float:
        """Implied active setpoint V_dc* i_dc*."""
        return self.V_dc_star * self.i_dc_star

    def validate(self) -> List[str]:
        out = []
        for name in ("C_dc", "V_dc_star", "K_theta", "K_dc"):
            value = getattr(self, name)
            if not value > 0:
                out.append(f"{name} must be > 0 (got {value})")
        return out + _common_checks(self)


@dataclass(frozen=True)
class EquivalentParams:
    M: float
    D: float
    P_star: float = 0.0
    Q_star: float = 0.0
    Vm_star: float = 1.0
    tau_f: float = 0.1
    R_q: float = 0.0

    @property
    def time_constant(self) -> float:
        """M/D; for matching this is C_dc/K_dc."""
        return self.M / self.D

    def validate(self) -> List[str]:
        out = []
        if not self.M > 0:
            out.append(f"M must be > 0 (got {self.M})")
        if not self.D > 0:
            out.append(f"D must be > 0 (got {self.D})")
        return out + _common_checks(self)


NativeParams = Union[VsmParams, DroopParams, MatchingParams]

PARAMS_BY_FAMILY = {
    ControllerFamily.VSM: VsmParams,
    ControllerFamily.DROOP: DroopParams,
    ControllerFamily.MATCHING: MatchingParams,
}


def _common_checks(p) -> List[str]:
    out = []
    if not p.tau_f > 0:
        out.append(f"tau_f must be > 0 (got {p.tau_f})")
    if not p.R_q >= 0:
        out.append(f"R_q must be >= 0 (got {p.R_q})")
    if not p.Vm_star > 0:
        out.append(f"Vm_star must be > 0 (got {p.Vm_star})")
    return out


@dataclass(frozen=True)
class ControllerConfig:
    """Controller assigned to one node: family, form and native gains/setpoints."""
    family: ControllerFamily
    form: ControllerForm
    params: NativeParams

    def __post_init__(self):
        object.__setattr__(self, "family", ControllerFamily(self.family))
        object.__setattr__(self, "form", ControllerForm(self.form))
        expected = PARAMS_BY_FAMILY[self.family]
        if not isinstance(self.params, expected):
            raise TypeError(f"{self.family.value} controller needs {expected.__name__}")

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.form.value}"

    @property
    def equivalent(self) -> EquivalentParams:
        return ParameterMap.map_to_equivalent(self.params)

    @property
    def differential_fields(self) -> Tuple[str, ...]:
        """State fields integrated in time; the rest are absent or algebraic outputs."""
        if self.form == ControllerForm.REDUCED:
            return ("theta", "omega", "Vm")
        if self.family == ControllerFamily.VSM:
            if self.params.active_filter:
                return ("theta", "omega", "P_filt", "Q_filt")
            return ("theta", "omega", "Q_filt")
        if self.family == ControllerFamily.DROOP:
            return ("theta", "P_filt", "Q_filt")
        return ("theta", "V_dc", "Q_filt")


def _voltage_from_filter(p, Q_filt: FloatLike) -> FloatLike:
    return p.Vm_star + p.R_q * (p.Q_star - Q_filt)


class ControllerDynamics:
    """Per-node derivative functions. Inputs may be scalars or per-group arrays."""

    @staticmethod
    def vsm_full_derivative(s: NodeState, p: VsmParams, P: FloatLike, Q: FloatLike) -> NodeState:
        """Swing equation with a filtered reactive measurement; Vm algebraic in Q~."""
        if p.active_filter:
            P_meas = s.P_filt
            dP_filt = (P - s.P_filt) / p.tau_f
        else:
            P_meas = P
            dP_filt = ABSENT
        domega = (-p.D * s.omega + p.P_star - P_meas) / p.M
        dQ_filt = (Q - s.Q_filt) / p.tau_f
        return NodeState(
            theta=s.omega,
            omega=domega,
            Vm=-p.R_q * dQ_filt,
            P_filt=dP_filt,
            Q_filt=dQ_filt,
        )

    @staticmethod
    def vsm_reduced_derivative(
        s: NodeState,
        p: Union[VsmParams, EquivalentParams],
        P: FloatLike,
        Q: FloatLike,
    ) -> NodeState:
        """Reference swing form shared by all three families."""
        return NodeState(
            theta=s.omega,
            omega=(-p.D * s.omega + p.P_star - P) / p.M,
            Vm=(p.R_q * (p.Q_star - Q) + (p.Vm_star - s.Vm)) / p.tau_f,
        )

    @staticmethod
    def droop_full_derivative(s: NodeState, p: DroopParams, P: FloatLike, Q: FloatLike) -> NodeState:
        """Frequency proportional to the filtered power mismatch."""
        omega = p.R_p * (p.P_star - s.P_filt)
        dP_filt = (P - s.P_filt) / p.tau_f
        dQ_filt = (Q - s.Q_filt) / p.tau_f
        return NodeState(
            theta=omega,
            omega=-p.R_p * dP_filt,
            Vm=-p.R_q * dQ_filt,
            P_filt=dP_filt,
            Q_filt=dQ_filt,
        )

    @staticmethod
    def droop_reduced_derivative(s: NodeState, p: DroopParams, P: FloatLike, Q: FloatLike) -> NodeState:
        return ControllerDynamics.vsm_reduced_derivative(s, ParameterMap.map_to_equivalent(p), P, Q)

    @staticmethod
    def matching_full_derivative(s: NodeState, p: MatchingParams, P: FloatLike, Q: FloatLike) -> NodeState:
        """Frequency tied to the DC-link voltage; DC current from a proportional voltage loop."""
        V_dc = s.V_dc
        if np.any(np.asarray(V_dc) <= 0):
            raise DCLinkCollapse(f"DC link collapse: V_dc = {np.min(V_dc):.6g} <= 0")
        omega = p.K_theta * (V_dc - p.V_dc_star)
        i_dc = p.i_dc_star + p.K_dc * (p.V_dc_star - V_dc)
        dV_dc = (i_dc - P / V_dc) / p.C_dc
        dQ_filt = (Q - s.Q_filt) / p.tau_f
        return NodeState(
            theta=omega,
            omega=p.K_theta * dV_dc,
            Vm=-p.R_q * dQ_filt,
            Q_filt=dQ_filt,
            V_dc=dV_dc,
        )

    @staticmethod
    def matching_reduced_derivative(s: NodeState, p: MatchingParams, P: FloatLike, Q: FloatLike) -> NodeState:
        """Reduced matching form with V_dc*/V_dc taken as 1."""
        return ControllerDynamics.vsm_reduced_derivative(s, ParameterMap.map_to_equivalent(p), P, Q)

    @staticmethod
    def derivative(s: NodeState, config: ControllerConfig, P: FloatLike, Q: FloatLike) -> NodeState:
        fn = _DERIVATIVES[(ControllerFamily(config.family), ControllerForm(config.form))]
        return fn(s, config.params, P, Q)

    @staticmethod
    def outputs(s: NodeState, config: ControllerConfig) -> NodeState:
        """Recompute the algebraic outputs (omega, Vm) of full forms from their states."""
        if config.form == ControllerForm.REDUCED:
            return s
        p = config.params
        Vm = _voltage_from_filter(p, s.Q_filt)
        if config.family == ControllerFamily.VSM:
            return replace(s, Vm=Vm)
        if config.family == ControllerFamily.DROOP:
            return replace(s, omega=p.R_p * (p.P_star - s.P_filt), Vm=Vm)
        return replace(s, omega=p.K_theta * (s.V_dc - p.V_dc_star), Vm=Vm)

    @staticmethod
    def initial_state(
        config: ControllerConfig,
        P0: float,
        Q0: float,
        overrides: Optional[Mapping[str, float]] = None,
    ) -> NodeState:
        """
        Consistent initial state for one node.

        theta, omega, Vm default to 0, 0, Vm*. Filter states default to the
        instantaneous flows P0, Q0; an omega override on full droop/matching
        is realized through P~ or V_dc, a Vm override on full forms through Q~.
        Explicit P_filt / Q_filt / V_dc overrides win.
        """
        overrides = dict(overrides or {})
        p = config.params
        theta = float(overrides.get("theta", 0.0))
        omega = float(overrides.get("omega", 0.0))
        Vm = float(overrides.get("Vm", p.Vm_star))

        if config.form == ControllerForm.REDUCED:
            return NodeState(theta=theta, omega=omega, Vm=Vm)

        if "Q_filt" in overrides:
            Q_filt = float(overrides["Q_filt"])
        elif "Vm" in overrides and p.R_q > 0:
            Q_filt = p.Q_star - (Vm - p.Vm_star) / p.R_q
        else:
            Q_filt = float(Q0)

        if config.family == ControllerFamily.VSM:
            P_filt = float(overrides.get("P_filt", P0)) if p.active_filter else ABSENT
            state = NodeState(theta=theta, omega=omega, P_filt=P_filt, Q_filt=Q_filt)
        elif config.family == ControllerFamily.DROOP:
            if "P_filt" in overrides:
                P_filt = float(overrides["P_filt"])
            elif "omega" in overrides:
                P_filt = p.P_star - omega / p.R_p
            else:
                P_filt = float(P0)
            state = NodeState(theta=theta, P_filt=P_filt, Q_filt=Q_filt)
        else:
            if "V_dc" in overrides:
                V_dc = float(overrides["V_dc"])
            else:
                V_dc = p.V_dc_star + omega / p.K_theta
            state = NodeState(theta=theta, Q_filt=Q_filt, V_dc=V_dc)

        return ControllerDynamics.outputs(state, config)


_DERIVATIVES: Dict[Tuple[ControllerFamily, ControllerForm], Callable[..., NodeState]] = {
    (ControllerFamily.VSM, ControllerForm.FULL): ControllerDynamics.vsm_full_derivative,
    (ControllerFamily.VSM, ControllerForm.REDUCED): ControllerDynamics.vsm_reduced_derivative,
    (ControllerFamily.DROOP, ControllerForm.FULL): ControllerDynamics.droop_full_derivative,
    (ControllerFamily.DROOP, ControllerForm.REDUCED): ControllerDynamics.droop_reduced_derivative,
    (ControllerFamily.MATCHING, ControllerForm.FULL): ControllerDynamics.matching_full_derivative,
    (ControllerFamily.MATCHING, ControllerForm.REDUCED): ControllerDynamics.matching_reduced_derivative,
}


# Parameters a sweep may vary, per family.
SWEEPABLE: Dict[str, Tuple[ControllerFamily, ...]] = {
    "m": (ControllerFamily.VSM,),
    "d": (ControllerFamily.VSM,),
    "R_p": (ControllerFamily.DROOP,),
    "K_theta": (ControllerFamily.MATCHING,),
    "K_dc": (ControllerFamily.MATCHING,),
    "tau_f": (ControllerFamily.VSM, ControllerFamily.DROOP, ControllerFamily.MATCHING),
}


class ParameterMap:
    """Equivalent inertia/damping of each family and its inverse."""

    @staticmethod
    def map_to_equivalent(params: Union[NativeParams, EquivalentParams]) -> EquivalentParams:
        if isinstance(params, EquivalentParams):
            return params
        if isinstance(params, VsmParams):
            M, D = params.M, params.D
        elif isinstance(params, DroopParams):
            M, D = params.tau_f / params.R_p, 1.0 / params.R_p
        elif isinstance(params, MatchingParams):
            M = params.C_dc * params.V_dc_star / params.K_theta
            D = params.K_dc * params.V_dc_star / params.K_theta
        else:
            raise TypeError(f"unsupported parameter set: {type(params).__name__}")
        return EquivalentParams(
            M=M,
            D=D,
            P_star=params.P_star,
            Q_star=params.Q_star,
            Vm_star=params.Vm_star,
            tau_f=params.tau_f,
            R_q=params.R_q,
        )

    @staticmethod
    def invert_equivalent(
        target: EquivalentParams,
        family: ControllerFamily,
        fixed: Optional[Mapping[str, float]] = None,
    ) -> NativeParams:
        """
        Native gains of `family` that reproduce target (M, D).

        droop: fixed may give tau_f (defaults to target.tau_f); it must equal M/D.
        matching: fixed gives V_dc_star (default 1) and exactly one of C_dc, K_theta.
        vsm: identity, fixed must not pin M or D.
        """
        fixed = dict(fixed or {})
        family = ControllerFamily(family)
        common = dict(Q_star=target.Q_star, Vm_star=target.Vm_star, R_q=target.R_q)

        if family == ControllerFamily.VSM:
            pinned = sorted(set(fixed) & {"M", "D"})
            if pinned:
                raise ParameterInversionError(f"overdetermined: vsm takes M, D from the target, not {pinned}")
            return VsmParams(M=target.M, D=target.D, tau_f=target.tau_f, P_star=target.P_star, **common)

        if family == ControllerFamily.DROOP:
            unknown = sorted(set(fixed) - {"tau_f"})
            if unknown:
                raise ParameterInversionError(f"overdetermined: droop accepts only tau_f as fixed, got {unknown}")
            tau_f = float(fixed.get("tau_f", target.tau_f))
            if not math.isclose(tau_f, target.M / target.D, rel_tol=INVERSION_RTOL):
                raise ParameterInversionError(
                    f"τ_f must equal M/D for droop (tau_f={tau_f:g}, M/D={target.M / target.D:g})"
                )
            return DroopParams(R_p=1.0 / target.D, tau_f=tau_f, P_star=target.P_star, **common)

        unknown = sorted(set(fixed) - {"C_dc", "K_theta", "V_dc_star"})
        if unknown:
            raise ParameterInversionError(f"overdetermined: matching does not accept fixed {unknown}")
        V_dc_star = float(fixed.get("V_dc_star", 1.0))
        if ("C_dc" in fixed) == ("K_theta" in fixed):
            kind = "overdetermined" if "C_dc" in fixed else "underdetermined"
            raise ParameterInversionError(f"{kind}: matching needs exactly one of C_dc, K_theta in the fixed set")
        if "C_dc" in fixed:
            C_dc = float(fixed["C_dc"])
            K_theta = C_dc * V_dc_star / target.M
        else:
            K_theta = float(fixed["K_theta"])
            C_dc = target.M * K_theta / V_dc_star
        return MatchingParams(
            C_dc=C_dc,
            K_theta=K_theta,
            K_dc=target.D * K_theta / V_dc_star,
            V_dc_star=V_dc_star,
            i_dc_star=target.P_star / V_dc_star,
            tau_f=target.tau_f,
            **common,
        )

    @staticmethod
    def with_param(config: ControllerConfig, name: str, value: float) -> ControllerConfig:
        """Copy of config with one sweepable parameter changed."""
        if name not in SWEEPABLE:
            raise ScenarioValidationError(f"unknown sweep parameter '{name}' (choose from {sorted(SWEEPABLE)})")
        family = ControllerFamily(config.family)
        if family not in SWEEPABLE[name]:
            raise ScenarioValidationError(f"parameter '{name}' does not apply to {family.value} controllers")
        attr = {"m": "M", "d": "D"}.get(name, name)
        return replace(config, params=replace(config.params, **{attr: float(value)}))

    @staticmethod
    def common_equivalent(
        configs: Sequence[ControllerConfig],
        keys: Sequence[str] = ("M", "D", "tau_f", "R_q", "Vm_star"),
    ) -> EquivalentParams:
        """
        The single EquivalentParams shared by all nodes.

        Raises HeterogeneousTuningError naming the differing fields.
        """
        if not configs:
            raise ScenarioValidationError("no controllers defined")
        equivalents = [c.equivalent for c in configs]
        ref = equivalents[0]
        differing = []
        for key in keys:
            base = getattr(ref, key)
            for node, eq in enumerate(equivalents):
                value = getattr(eq, key)
                if not math.isclose(value, base, rel_tol=TUNING_RTOL, abs_tol=1e-15):
                    differing.append(f"{key} (node 0: {base:g}, node {node}: {value:g})")
                    break
        if differing:
            raise HeterogeneousTuningError(
                [
                    "network analysis assumes all converters are tuned identically; "
                    "nodes differ in " + ", ".join(differing)
                ]
            )
        return ref


def params_from_mapping(family: ControllerFamily, values: Mapping[str, float]) -> NativeParams:
    """Build a native parameter set, rejecting unknown or missing names."""
    cls = PARAMS_BY_FAMILY[ControllerFamily(family)]
    allowed = {f.name for f in fields(cls)}
    diagnostics = []
    for key in values:
        if key in ("tau_p", "tau_q"):
            diagnostics.append(f"{key}: separate P/Q filter time constants are not supported, use tau_f")
        elif key not in allowed:
            diagnostics.append(f"{key}: unknown parameter for {cls.__name__}")
    if diagnostics:
        raise ScenarioValidationError(diagnostics)
    try:
        params = cls(**values)
    except TypeError as exc:
        missing = sorted(
            f.name for f in fields(cls)
            if f.name not in values and f.default is MISSING and f.default_factory is MISSING
        )
        raise ScenarioValidationError([f"{name}: required" for name in missing] or [str(exc)]) from exc
    diagnostics = params.validate()
    if diagnostics:
        raise ScenarioValidationError(diagnostics)
    return params
