# src/domain/models.py
"""Domain value objects shared by the network, controller and simulator layers."""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Tuple, Union

import networkx as nx
import numpy as np

FloatLike = Union[float, np.ndarray]

# Column order of the per-node state arrays used by the simulator.
STATE_FIELDS: Tuple[str, ...] = ("theta", "omega", "Vm", "P_filt", "Q_filt", "V_dc")
STATE_INDEX: Dict[str, int] = {name: i for i, name in enumerate(STATE_FIELDS)}
ABSENT = float("nan")


class QSignConvention(str, Enum):
    """Reactive-power expression used by the nonlinear flow."""
    PAPER = "paper"  # +B cos, no self terms
    STANDARD = "standard"  # G sin - B cos with self-admittance terms


class FlowModel(str, Enum):
    AC_PAPER = "ac-paper"
    AC_STANDARD = "ac-standard"
    DC_LINEAR = "dc-linear"


@dataclass(frozen=True)
class Edge:
    """Transmission line between nodes k and l (per-unit conductance and susceptance magnitude)."""
    k: int
    l: int
    B: float
    G: float = 0.0


@dataclass(frozen=True)
class NetworkGraph:
    """Weighted undirected power network. Invariants are checked by NetworkModel.validate_graph."""
    n: int
    edges: Tuple[Edge, ...] = ()
    omega0: float = 2.0 * math.pi * 50.0  # rad/s, dq-frame rotation

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(k, l, G, B) as arrays, in edge order."""
        k = np.array([e.k for e in self.edges], dtype=int)
        l = np.array([e.l for e in self.edges], dtype=int)
        g = np.array([e.G for e in self.edges], dtype=float)
        b = np.array([e.B for e in self.edges], dtype=float)
        return k, l, g, b

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        for e in self.edges:
            if 0 <= e.k < self.n and 0 <= e.l < self.n:
                g.add_edge(e.k, e.l, B=e.B, G=e.G)
        return g

    @classmethod
    def from_networkx(
        cls,
        graph: nx.Graph,
        B: float = 1.0,
        G: float = 0.0,
        omega0: float = 2.0 * math.pi * 50.0,
    ) -> "NetworkGraph":
        """Build from a networkx graph; edge attributes 'B'/'G' override the defaults."""
        nodes = sorted(graph.nodes)
        index = {node: i for i, node in enumerate(nodes)}
        edges = tuple(
            Edge(
                k=index[u],
                l=index[v],
                B=float(data.get("B", B)),
                G=float(data.get("G", G)),
            )
            for u, v, data in graph.edges(data=True)
        )
        return cls(n=len(nodes), edges=edges, omega0=omega0)


@dataclass(frozen=True)
class SusceptanceLaplacian:
    """Dense symmetric n x n Laplacian of line susceptances."""
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BusVoltages:
    theta: np.ndarray  # rad
    Vm: np.ndarray  # pu, > 0


@dataclass(frozen=True)
class NodeState:
    """Per-node dynamic state. Fields a controller form does not carry hold ABSENT (NaN).

    Fields may also hold arrays (one entry per node of a group) so the same
    derivative functions serve scalar and vectorized evaluation.
    """
    theta: FloatLike = ABSENT
    omega: FloatLike = ABSENT
    Vm: FloatLike = ABSENT
    P_filt: FloatLike = ABSENT
    Q_filt: FloatLike = ABSENT
    V_dc: FloatLike = ABSENT

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_FIELDS], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "NodeState":
        """From a length-6 row, or from an (m, 6) block (fields become arrays)."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            return cls(**{name: float(values[i]) for i, name in enumerate(STATE_FIELDS)})
        return cls(**{name: values[:, i] for i, name in enumerate(STATE_FIELDS)})


@dataclass(frozen=True)
class Disturbance:
    """Step in a node's net power extraction, constant after t_start."""
    t_start: float
    node: int
    delta_P: float

