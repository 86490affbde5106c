# src/domain/network_model.py
"""Network graph validation, susceptance Laplacian and power flows."""

import logging
from dataclasses import replace
from typing import List, Tuple

import networkx as nx
import numpy as np

from src.domain.errors import GraphValidationError
from src.domain.models import (
    BusVoltages,
    FlowModel,
    NetworkGraph,
    QSignConvention,
    SusceptanceLaplacian,
)

logger = logging.getLogger(__name__)


class NetworkModel:
    """Evaluates the power network: Laplacian, nonlinear AC and linearized DC flows."""

    @staticmethod
    def validate_graph(graph: NetworkGraph) -> List[str]:
        """
        Collect every invariant violation of the graph.

        Returns an empty list for a valid graph; never raises.
        """
        diagnostics: List[str] = []

        if graph.n < 1:
            diagnostics.append(f"node count must be >= 1 (got {graph.n})")
            return diagnostics

        seen = set()
        for e in graph.edges:
            if not (0 <= e.k < graph.n and 0 <= e.l < graph.n):
                diagnostics.append(f"edge ({e.k},{e.l}) references a node outside [0, {graph.n})")
                continue
            if e.k == e.l:
                diagnostics.append(f"self-loop on node {e.k}")
                continue
            pair = (min(e.k, e.l), max(e.k, e.l))
            if pair in seen:
                diagnostics.append(f"duplicate edge ({pair[0]},{pair[1]})")
            seen.add(pair)
            if not e.B > 0:
                diagnostics.append(f"nonpositive susceptance on ({e.k},{e.l})")
            if not e.G >= 0:
                diagnostics.append(f"negative conductance on ({e.k},{e.l})")

        components = sorted(
            (sorted(c) for c in nx.connected_components(graph.to_networkx())),
            key=lambda c: c[0],
        )
        if len(components) > 1:
            listed = ",".join("{" + ",".join(str(i) for i in c) + "}" for c in components)
            diagnostics.append(f"disconnected: components {listed}")

        return diagnostics

    @staticmethod
    def require_valid(graph: NetworkGraph) -> None:
        diagnostics = NetworkModel.validate_graph(graph)
        if diagnostics:
            raise GraphValidationError(diagnostics)

    @staticmethod
    def build_laplacian(graph: NetworkGraph) -> SusceptanceLaplacian:
        """L_B with off-diagonal -B_kl and diagonal sum of incident B."""
        NetworkModel.require_valid(graph)

        L = np.zeros((graph.n, graph.n))
        for e in graph.edges:
            L[e.k, e.l] -= e.B
            L[e.l, e.k] -= e.B
        # Diagonal taken from the off-diagonals so rows sum to zero.
        np.fill_diagonal(L, -L.sum(axis=1))
        return SusceptanceLaplacian(matrix=L)

    @staticmethod
    def ac_power_flow(
        graph: NetworkGraph,
        v: BusVoltages,
        convention: QSignConvention = QSignConvention.STANDARD,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nonlinear branch-based power flow.

        PAPER: sum over neighbours of Vk*Vl*[G cos + B sin] and Vk*Vl*[G sin + B cos].
        STANDARD: Y-bus form with self-admittance terms, Q uses G sin - B cos,
        so that P = Q = 0 at theta = 0, Vm = 1.
        """
        theta = np.asarray(v.theta, dtype=float)
        Vm = np.asarray(v.Vm, dtype=float)
        if theta.shape != (graph.n,) or Vm.shape != (graph.n,):
            raise ValueError(f"bus vectors must have length {graph.n}")

        P = np.zeros(graph.n)
        Q = np.zeros(graph.n)
        if not graph.edges:
            return P, Q

        k, l, g, b = graph.edge_arrays
        dth = theta[k] - theta[l]
        cos, sin = np.cos(dth), np.sin(dth)
        vk, vl = Vm[k], Vm[l]
        vkvl = vk * vl

        if convention == QSignConvention.PAPER:
            p_k = vkvl * (g * cos + b * sin)
            p_l = vkvl * (g * cos - b * sin)
            q_k = vkvl * (g * sin + b * cos)
            q_l = vkvl * (-g * sin + b * cos)
        else:
            p_k = g * (vk * vk - vkvl * cos) + b * vkvl * sin
            p_l = g * (vl * vl - vkvl * cos) - b * vkvl * sin
            q_k = b * (vk * vk - vkvl * cos) - g * vkvl * sin
            q_l = b * (vl * vl - vkvl * cos) + g * vkvl * sin

        np.add.at(P, k, p_k)
        np.add.at(P, l, p_l)
        np.add.at(Q, k, q_k)
        np.add.at(Q, l, q_l)
        return P, Q

    @staticmethod
    def dc_power_flow(
        lap: SusceptanceLaplacian,
        theta: np.ndarray,
        Vm: np.ndarray,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Linearized flow P = L_B theta, Q = L_B Vm."""
        theta = np.asarray(theta, dtype=float)
        Vm = np.asarray(Vm, dtype=float)
        if theta.shape != (lap.n,) or Vm.shape != (lap.n,):
            raise ValueError(
                f"dimension mismatch: Laplacian is {lap.n}x{lap.n}, "
                f"got theta {theta.shape} and Vm {Vm.shape}"
            )
        return lap.matrix @ theta, lap.matrix @ Vm

    @staticmethod
    def power_flow(
        graph: NetworkGraph,
        lap: SusceptanceLaplacian,
        v: BusVoltages,
        flow_model: FlowModel,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Dispatch on the scenario's flow model."""
        if flow_model == FlowModel.DC_LINEAR:
            return NetworkModel.dc_power_flow(lap, v.theta, v.Vm)
        if flow_model == FlowModel.AC_PAPER:
            return NetworkModel.ac_power_flow(graph, v, QSignConvention.PAPER)
        return NetworkModel.ac_power_flow(graph, v, QSignConvention.STANDARD)

    @staticmethod
    def dc_jacobian_check(graph: NetworkGraph, eps: float = 1e-7) -> float:
        """
        Max abs difference between L_B and the central finite-difference
        Jacobian dP/dtheta of the +B cos (PAPER convention) AC flow at theta = 0, Vm = 1.
        """
        lap = NetworkModel.build_laplacian(graph)
        lossless = NetworkGraph(
            n=graph.n,
            edges=tuple(replace(e, G=0.0) for e in graph.edges),
            omega0=graph.omega0,
        )
        ones = np.ones(graph.n)
        J = np.zeros((graph.n, graph.n))
        for j in range(graph.n):
            step = np.zeros(graph.n)
            step[j] = eps
            p_plus, _ = NetworkModel.ac_power_flow(
                lossless, BusVoltages(theta=step, Vm=ones), QSignConvention.PAPER
            )
            p_minus, _ = NetworkModel.ac_power_flow(
                lossless, BusVoltages(theta=-step, Vm=ones), QSignConvention.PAPER
            )
            J[:, j] = (p_plus - p_minus) / (2.0 * eps)
        deviation = float(np.max(np.abs(J - lap.matrix)))
        logger.debug("DC/AC Jacobian deviation %.3e on %d nodes", deviation, graph.n)
        return deviation
