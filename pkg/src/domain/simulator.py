# src/domain/simulator.py
"""Fixed-step RK4 integration of the coupled node + network system."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.domain.controllers import ControllerConfig, ControllerDynamics, ControllerFamily, ControllerForm
from src.domain.errors import DCLinkCollapse, NumericalFailure, ScenarioValidationError
from src.domain.models import (
    STATE_FIELDS,
    STATE_INDEX,
    BusVoltages,
    Disturbance,
    FlowModel,
    NetworkGraph,
    NodeState,
)
from src.domain.network_model import NetworkModel

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DEFAULT_T_END = 10.0

# Trajectory component name -> state column (None for the recorded flows).
COMPONENTS: Dict[str, Optional[int]] = {
    "theta": STATE_INDEX["theta"],
    "omega": STATE_INDEX["omega"],
    "vm": STATE_INDEX["Vm"],
    "p": None,
    "q": None,
    "vdc": STATE_INDEX["V_dc"],
}
CSV_COLUMNS = ["t", "node", "theta", "omega", "vm", "p", "q", "vdc"]


@dataclass(frozen=True)
class Scenario:
    """Unit of execution: network, per-node controllers, disturbances and integration settings."""
    graph: NetworkGraph
    controllers: Tuple[ControllerConfig, ...]
    flow_model: FlowModel = FlowModel.DC_LINEAR
    disturbances: Tuple[Disturbance, ...] = ()
    t_end: float = DEFAULT_T_END
    dt: float = DEFAULT_DT
    decimation: int = 1
    initial_state: Dict[int, Dict[str, float]] = field(default_factory=dict)
    name: str = "scenario"

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def samples(self) -> int:
        """Recorded trajectory length, initial state included."""
        return self.steps // self.decimation + 1

    def validate(self) -> List[str]:
        diagnostics = list(NetworkModel.validate_graph(self.graph))
        if not self.dt > 0:
            diagnostics.append(f"dt must be > 0 (got {self.dt})")
        elif not self.t_end >= self.dt:
            diagnostics.append(f"t_end must be >= dt (got t_end={self.t_end}, dt={self.dt})")
        if self.decimation < 1:
            diagnostics.append(f"decimation must be >= 1 (got {self.decimation})")
        if len(self.controllers) != self.n:
            diagnostics.append(f"controllers: expected {self.n} entries, got {len(self.controllers)}")
        for i, config in enumerate(self.controllers):
            diagnostics.extend(f"controllers[{i}].{d}" for d in config.params.validate())
        for i, dist in enumerate(self.disturbances):
            if not dist.t_start >= 0:
                diagnostics.append(f"disturbances[{i}].t_start must be >= 0 (got {dist.t_start})")
            if not 0 <= dist.node < self.n:
                diagnostics.append(f"disturbances[{i}].node {dist.node} is outside [0, {self.n})")
        for node, values in self.initial_state.items():
            if not 0 <= node < self.n:
                diagnostics.append(f"initial_state: node {node} is outside [0, {self.n})")
            unknown = sorted(set(values) - set(STATE_FIELDS))
            if unknown:
                diagnostics.append(f"initial_state[{node}]: unknown fields {unknown}")
            if "Vm" in values and not values["Vm"] > 0:
                diagnostics.append(f"initial_state[{node}].Vm must be > 0")
            if "V_dc" in values and not values["V_dc"] > 0:
                diagnostics.append(f"initial_state[{node}].V_dc must be > 0")
        return diagnostics

    def with_overrides(self, **overrides) -> "Scenario":
        """Replace settings whose override value is not None."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def disturbance_vector(self, t: float) -> np.ndarray:
        """Net power extraction per node active at time t."""
        delta = np.zeros(self.n)
        for dist in self.disturbances:
            if t + 1e-9 * self.dt >= dist.t_start:
                delta[dist.node] += dist.delta_P
        return delta

    def final_disturbance(self) -> np.ndarray:
        """Extraction vector once every disturbance is active."""
        return self.disturbance_vector(math.inf)


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: times (T,), states (T, n, 6) in STATE_FIELDS order, flows (T, n)."""
    times: np.ndarray
    states: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    labels: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def component(self, name: str) -> np.ndarray:
        """(T, n) array for one of theta, omega, vm, p, q, vdc."""
        if name not in COMPONENTS:
            raise ValueError(f"unknown component '{name}' (choose from {list(COMPONENTS)})")
        if name == "p":
            return self.P
        if name == "q":
            return self.Q
        return self.states[:, :, COMPONENTS[name]]

    def to_frame(self) -> pd.DataFrame:
        """Long format, one row per (t, node); vdc is NaN for nodes without a DC link."""
        T, n = len(self.times), self.n
        frame = pd.DataFrame(
            {
                "t": np.repeat(self.times, n),
                "node": np.tile(np.arange(n), T),
            }
        )
        for name in CSV_COLUMNS[2:]:
            frame[name] = self.component(name).reshape(T * n)
        return frame


def rk4_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    x: np.ndarray,
    dt: float,
) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of dx/dt = f(t, x)."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Simulator:
    """Integrates one scenario. Node groups sharing a controller are evaluated vectorized."""

    def __init__(self, scenario: Scenario):
        diagnostics = scenario.validate()
        if diagnostics:
            raise ScenarioValidationError(diagnostics)
        self.scenario = scenario
        self.lap = NetworkModel.build_laplacian(scenario.graph)

        groups: Dict[ControllerConfig, List[int]] = {}
        for node, config in enumerate(scenario.controllers):
            groups.setdefault(config, []).append(node)
        self._groups = [(config, np.array(nodes)) for config, nodes in groups.items()]

        self._matching_full = np.array(
            [
                c.family == ControllerFamily.MATCHING and c.form == ControllerForm.FULL
                for c in scenario.controllers
            ]
        )

    def flows(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        v = BusVoltages(theta=X[:, STATE_INDEX["theta"]], Vm=X[:, STATE_INDEX["Vm"]])
        return NetworkModel.power_flow(self.scenario.graph, self.lap, v, self.scenario.flow_model)

    def refresh(self, X: np.ndarray) -> np.ndarray:
        """Copy of X with algebraic outputs recomputed from the states."""
        X = X.copy()
        for config, idx in self._groups:
            if config.form == ControllerForm.FULL:
                s = ControllerDynamics.outputs(NodeState.from_array(X[idx]), config)
                X[idx] = np.column_stack([np.broadcast_to(getattr(s, name), idx.shape) for name in STATE_FIELDS])
        return X

    def derivative(self, t: float, X: np.ndarray, delta: Optional[np.ndarray] = None) -> np.ndarray:
        """dX/dt; delta is the extraction vector, taken at t when not given."""
        X = self.refresh(X)
        P, Q = self.flows(X)
        P_eff = P + (self.scenario.disturbance_vector(t) if delta is None else delta)

        dX = np.zeros_like(X)
        for config, idx in self._groups:
            ds = ControllerDynamics.derivative(NodeState.from_array(X[idx]), config, P_eff[idx], Q[idx])
            for name in config.differential_fields:
                dX[idx, STATE_INDEX[name]] = getattr(ds, name)
        return dX

    def initial_state(self) -> np.ndarray:
        """(n, 6) state at t = 0; filter states default to the flows at the initial (theta, Vm)."""
        sc = self.scenario
        theta0 = np.array([sc.initial_state.get(k, {}).get("theta", 0.0) for k in range(sc.n)])
        Vm0 = np.array(
            [sc.initial_state.get(k, {}).get("Vm", c.params.Vm_star) for k, c in enumerate(sc.controllers)]
        )
        P0, Q0 = NetworkModel.power_flow(sc.graph, self.lap, BusVoltages(theta=theta0, Vm=Vm0), sc.flow_model)

        X = np.vstack(
            [
                ControllerDynamics.initial_state(config, P0[k], Q0[k], sc.initial_state.get(k)).as_array()
                for k, config in enumerate(sc.controllers)
            ]
        )
        return X

    def rk4_step(self, X: np.ndarray, t: float, dt: float, step: int = 0) -> np.ndarray:
        """
        Advance the full-system state by dt.

        Flows are re-evaluated at every stage; disturbances are held at their
        value at the start of the step.
        """
        delta = self.scenario.disturbance_vector(t)
        try:
            X_next = self.refresh(rk4_step(lambda s, x: self.derivative(s, x, delta), t, X, dt))
        except DCLinkCollapse as exc:
            raise DCLinkCollapse(f"DC link collapse at t={t:.6g} s (step {step})", step=step, t=t) from exc

        if self._matching_full.any():
            V_dc = X_next[self._matching_full, STATE_INDEX["V_dc"]]
            if np.any(V_dc <= 0):
                raise DCLinkCollapse(f"DC link collapse at t={t + dt:.6g} s (step {step})", step=step, t=t + dt)

        present = ~np.isnan(X)
        if not np.all(np.isfinite(X_next[present])):
            raise NumericalFailure(f"non-finite state at step {step} (t={t + dt:.6g} s)", step=step, t=t + dt)
        return X_next

    def run(self) -> Trajectory:
        sc = self.scenario
        steps = sc.steps
        logger.info(
            "Running %s: n=%d, %d steps of dt=%g s, flow=%s",
            sc.name, sc.n, steps, sc.dt, sc.flow_model.value,
        )

        X = self.refresh(self.initial_state())
        samples = sc.samples
        times = np.arange(samples) * (sc.dt * sc.decimation)
        states = np.empty((samples, sc.n, len(STATE_FIELDS)))
        P_rec = np.empty((samples, sc.n))
        Q_rec = np.empty((samples, sc.n))

        def record(i: int, X: np.ndarray) -> None:
            states[i] = X
            P_rec[i], Q_rec[i] = self.flows(X)

        record(0, X)
        for step in range(steps):
            t = step * sc.dt
            X = self.rk4_step(X, t, sc.dt, step=step)
            if (step + 1) % sc.decimation == 0:
                record((step + 1) // sc.decimation, X)

        logger.info("Finished %s after %d steps", sc.name, steps)
        return Trajectory(
            times=times,
            states=states,
            P=P_rec,
            Q=Q_rec,
            labels=tuple(c.label for c in sc.controllers),
        )

    @staticmethod
    def run_scenario(scenario: Scenario) -> Trajectory:
        return Simulator(scenario).run()
