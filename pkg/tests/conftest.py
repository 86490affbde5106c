# tests/conftest.py
from __future__ import annotations

import sys
from pathlib import Path

import networkx as nx
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))
if SRC.exists() and str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

SCENARIOS = ROOT / "scenarios"


def make_graph(g: nx.Graph, B: float = 1.0):
    from src.domain.models import NetworkGraph
    return NetworkGraph.from_networkx(g, B=B)


def vsm(M: float = 2.0, D: float = 20.0, form: str = "reduced", **kw):
    from src.domain.controllers import ControllerConfig, VsmParams
    return ControllerConfig(family="vsm", form=form, params=VsmParams(M=M, D=D, **kw))


def droop(R_p: float = 0.05, tau_f: float = 0.1, form: str = "reduced", **kw):
    from src.domain.controllers import ControllerConfig, DroopParams
    return ControllerConfig(family="droop", form=form, params=DroopParams(R_p=R_p, tau_f=tau_f, **kw))


def matching(C_dc: float = 0.08, K_theta: float = 0.04, K_dc: float = 0.8, form: str = "reduced", **kw):
    from src.domain.controllers import ControllerConfig, MatchingParams
    return ControllerConfig(
        family="matching", form=form, params=MatchingParams(C_dc=C_dc, K_theta=K_theta, K_dc=K_dc, **kw)
    )


def scenario(graph, config, disturbances=(), **kw):
    """Identically controlled scenario; disturbances are (t_start, node, delta_P) tuples."""
    from src.domain.models import Disturbance
    from src.domain.simulator import Scenario
    return Scenario(
        graph=graph,
        controllers=(config,) * graph.n,
        disturbances=tuple(Disturbance(*d) for d in disturbances),
        **kw,
    )


@pytest.fixture()
def single_node():
    from src.domain.models import NetworkGraph
    return NetworkGraph(n=1)


@pytest.fixture()
def two_node():
    return make_graph(nx.path_graph(2))


@pytest.fixture()
def triangle_b2():
    return make_graph(nx.cycle_graph(3), B=2.0)


@pytest.fixture()
def ring4():
    return make_graph(nx.cycle_graph(4))


@pytest.fixture()
def test_graphs():
    """Connected graphs with n <= 8."""
    return [
        make_graph(nx.path_graph(2)),
        make_graph(nx.cycle_graph(3), B=2.0),
        make_graph(nx.cycle_graph(4)),
        make_graph(nx.complete_graph(5)),
        make_graph(nx.star_graph(5), B=0.5),
        make_graph(nx.path_graph(8), B=1.5),
    ]


@pytest.fixture()
def scenario_path():
    def _path(name: str) -> Path:
        return SCENARIOS / f"{name}.json"
    return _path
