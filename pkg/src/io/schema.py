# src/io/schema.py
"""
Scenario file and report schemas.
Non-table SQLModel classes used purely for validation; unknown keys are rejected.
"""

import math
from typing import Dict, List, Optional, Union

from pydantic import ConfigDict
from sqlmodel import Field, SQLModel

from src.domain.controllers import ControllerFamily, ControllerForm
from src.domain.models import FlowModel


class StrictModel(SQLModel):
    model_config = ConfigDict(extra="forbid")


class EdgeSchema(StrictModel):
    k: int
    l: int
    B: float  # susceptance magnitude, pu
    G: float = Field(default=0.0)


class NetworkSchema(StrictModel):
    nodes: int = Field(ge=1)
    omega0: float = Field(default=2.0 * math.pi * 50.0, gt=0)
    edges: List[EdgeSchema] = Field(default_factory=list)


class ControllerSchema(StrictModel):
    family: ControllerFamily
    form: ControllerForm = Field(default=ControllerForm.REDUCED)
    params: Dict[str, Union[bool, float]] = Field(default_factory=dict)


class NodeControllerSchema(ControllerSchema):
    node: int = Field(ge=0)


class ControllersSchema(StrictModel):
    default: Optional[ControllerSchema] = None
    nodes: List[NodeControllerSchema] = Field(default_factory=list)


class InitialStateSchema(StrictModel):
    node: int = Field(ge=0)
    theta: Optional[float] = None
    omega: Optional[float] = None
    Vm: Optional[float] = None
    P_filt: Optional[float] = None
    Q_filt: Optional[float] = None
    V_dc: Optional[float] = None


class SimulationSchema(StrictModel):
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=10.0, gt=0)
    flow_model: FlowModel = Field(default=FlowModel.DC_LINEAR)
    decimation: int = Field(default=1, ge=1)
    band: float = Field(default=0.02, gt=0)  # settling band, relative to max|omega|
    tol: float = Field(default=1e-10, gt=0)  # compare verdict tolerance
    initial_state: List[InitialStateSchema] = Field(default_factory=list)


class DisturbanceSchema(StrictModel):
    t_start: float = Field(default=0.0, ge=0)
    node: int = Field(ge=0)
    delta_P: float  # pu added to the node's net power extraction


class OutputsSchema(StrictModel):
    trajectory: Optional[str] = None
    metrics: Optional[str] = None
    report: Optional[str] = None
    sweep: Optional[str] = None
    compare: Optional[str] = None


class CompareSchema(StrictModel):
    # family -> native parameters pinned when realizing the common (M, D)
    fixed: Dict[ControllerFamily, Dict[str, float]] = Field(default_factory=dict)


class ScenarioSchema(StrictModel):
    name: Optional[str] = None
    description: Optional[str] = None
    network: NetworkSchema
    controllers: ControllersSchema
    simulation: SimulationSchema = Field(default_factory=SimulationSchema)
    disturbances: List[DisturbanceSchema] = Field(default_factory=list)
    outputs: OutputsSchema = Field(default_factory=OutputsSchema)
    compare: CompareSchema = Field(default_factory=CompareSchema)


# Reports


class ModeSchema(StrictModel):
    real: float
    imag: float
    source_lambda: float
    classification: str
    defective: bool = False


class SteadyStateSchema(StrictModel):
    omega_ss: float
    theta: List[float]
    delta_theta: List[float]
    theta_avg_ramp_rate: float


class TuningSchema(StrictModel):
    m: float
    d: float
    lambda_max: float
    eta2: ModeSchema
    d_crit: float
    regime: str
    oscillatory: bool
    rocof_per_unit_step: float


class ResidualSchema(StrictModel):
    passed: bool
    tol: float
    max_residual: float
    failing: List[str] = Field(default_factory=list)


class AnalysisReportSchema(StrictModel):
    scenario: str
    config: Dict[str, Union[int, float, str, None]]
    lambdas: List[float]
    modes: List[ModeSchema]
    residuals: ResidualSchema
    tuning: TuningSchema
    voltage_modes: List[float]
    steady_state: Optional[SteadyStateSchema] = None
