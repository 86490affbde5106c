# src/io/scenario_parser.py
"""Scenario JSON parser: text -> schema -> domain Scenario."""

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import ValidationError

from src.domain.controllers import ControllerConfig, params_from_mapping
from src.domain.errors import ScenarioParseError, ScenarioValidationError
from src.domain.models import Disturbance, Edge, NetworkGraph
from src.domain.simulator import Scenario
from src.io.schema import ControllerSchema, ScenarioSchema

logger = logging.getLogger(__name__)


@dataclass
class ParsedScenario:
    """Validated scenario file plus the domain scenario built from it."""
    schema: ScenarioSchema
    scenario: Scenario
    source: str = "<string>"
    warnings: List[str] = field(default_factory=list)

    @property
    def band(self) -> float:
        return self.schema.simulation.band

    @property
    def tol(self) -> float:
        return self.schema.simulation.tol


def _loc(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def _drop(data: Any, loc: Tuple[Any, ...]) -> bool:
    node = data
    for part in loc[:-1]:
        try:
            node = node[part]
        except (KeyError, IndexError, TypeError):
            return False
    if isinstance(node, dict) and loc and loc[-1] in node:
        del node[loc[-1]]
        return True
    return False


class ScenarioParser:
    """Parse and validate scenario files."""

    @staticmethod
    def validate_document(data: Any, strict: bool = True) -> Tuple[ScenarioSchema, List[str]]:
        """
        Validate a decoded JSON document against ScenarioSchema.

        strict: unknown keys are errors.
        lenient: unknown keys are dropped with one warning each, then validation is retried.
        """
        warnings: List[str] = []
        try:
            return ScenarioSchema.model_validate(data), warnings
        except ValidationError as exc:
            errors = exc.errors()

        extra = [e for e in errors if e["type"] == "extra_forbidden"]
        if strict or not extra:
            raise ScenarioValidationError([f"{_loc(e['loc'])}: {e['msg']}" for e in errors])

        data = copy.deepcopy(data)
        for e in extra:
            if _drop(data, tuple(e["loc"])):
                message = f"ignoring unknown key {_loc(e['loc'])}"
                logger.warning(message)
                warnings.append(message)
        try:
            return ScenarioSchema.model_validate(data), warnings
        except ValidationError as exc:
            raise ScenarioValidationError([f"{_loc(e['loc'])}: {e['msg']}" for e in exc.errors()]) from exc

    @staticmethod
    def parse_text(text: str, strict: bool = True, source: str = "<string>") -> ParsedScenario:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError([f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
        schema, warnings = ScenarioParser.validate_document(data, strict=strict)
        scenario = ScenarioParser.to_scenario(schema, name=schema.name or Path(source).stem)
        return ParsedScenario(schema=schema, scenario=scenario, source=source, warnings=warnings)

    @staticmethod
    def load(path: Union[str, Path], strict: bool = True) -> ParsedScenario:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioParseError([f"{path}: cannot read scenario ({exc.strerror})"]) from exc
        parsed = ScenarioParser.parse_text(text, strict=strict, source=str(path))
        logger.info(
            "Loaded scenario %s: %d nodes, %d edges, %d disturbances",
            path, parsed.scenario.n, len(parsed.scenario.graph.edges), len(parsed.scenario.disturbances),
        )
        return parsed

    @staticmethod
    def _controller(entry: ControllerSchema, where: str) -> ControllerConfig:
        try:
            params = params_from_mapping(entry.family, entry.params)
        except ScenarioValidationError as exc:
            raise ScenarioValidationError([f"{where}.params.{d}" for d in exc.diagnostics]) from exc
        return ControllerConfig(family=entry.family, form=entry.form, params=params)

    @staticmethod
    def to_scenario(schema: ScenarioSchema, name: str = "scenario") -> Scenario:
        """Build the domain Scenario; every problem found is reported at once."""
        n = schema.network.nodes
        diagnostics: List[str] = []

        graph = NetworkGraph(
            n=n,
            edges=tuple(Edge(k=e.k, l=e.l, B=e.B, G=e.G) for e in schema.network.edges),
            omega0=schema.network.omega0,
        )

        per_node: Dict[int, ControllerConfig] = {}
        default = None
        if schema.controllers.default is not None:
            try:
                default = ScenarioParser._controller(schema.controllers.default, "controllers.default")
            except ScenarioValidationError as exc:
                diagnostics.extend(exc.diagnostics)
        for i, entry in enumerate(schema.controllers.nodes):
            where = f"controllers.nodes.{i}"
            if entry.node >= n:
                diagnostics.append(f"{where}.node: {entry.node} is outside [0, {n})")
                continue
            if entry.node in per_node:
                diagnostics.append(f"{where}.node: controller for node {entry.node} given twice")
                continue
            try:
                per_node[entry.node] = ScenarioParser._controller(entry, where)
            except ScenarioValidationError as exc:
                diagnostics.extend(exc.diagnostics)

        controllers = []
        for k in range(n):
            config = per_node.get(k, default)
            if config is None:
                if schema.controllers.default is None:
                    diagnostics.append(f"controllers: no controller for node {k} and no default")
                continue
            controllers.append(config)

        initial_state: Dict[int, Dict[str, float]] = {}
        for i, entry in enumerate(schema.simulation.initial_state):
            if entry.node in initial_state:
                diagnostics.append(f"simulation.initial_state.{i}.node: node {entry.node} given twice")
                continue
            initial_state[entry.node] = entry.model_dump(exclude={"node"}, exclude_none=True)

        if diagnostics:
            raise ScenarioValidationError(diagnostics)

        sim = schema.simulation
        scenario = Scenario(
            graph=graph,
            controllers=tuple(controllers),
            flow_model=sim.flow_model,
            disturbances=tuple(
                Disturbance(t_start=d.t_start, node=d.node, delta_P=d.delta_P) for d in schema.disturbances
            ),
            t_end=sim.t_end,
            dt=sim.dt,
            decimation=sim.decimation,
            initial_state=initial_state,
            name=name,
        )
        diagnostics = scenario.validate()
        if diagnostics:
            raise ScenarioValidationError(diagnostics)
        return scenario
