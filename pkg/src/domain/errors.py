# src/domain/errors.py
"""Exception hierarchy shared by the domain, io and cli layers."""

from typing import List, Optional


class GridFormError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioValidationError(GridFormError, ValueError):
    """Input could not be accepted. Carries one diagnostic per problem."""

    def __init__(self, diagnostics: List[str]):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class ScenarioParseError(ScenarioValidationError):
    """Scenario text is not well-formed JSON."""


class GraphValidationError(ScenarioValidationError):
    """Network graph violates an invariant (connectivity, edges, susceptances)."""


class HeterogeneousTuningError(ScenarioValidationError):
    """Network-level analysis requested on nodes that are not tuned identically."""


class ParameterInversionError(ScenarioValidationError):
    """Equivalent (M, D) cannot be realized by the requested controller family."""


class NumericalFailure(GridFormError, RuntimeError):
    """Integration or iteration produced an unusable result."""

    def __init__(self, message: str, step: Optional[int] = None, t: Optional[float] = None):
        self.step = step
        self.t = t
        super().__init__(message)


class DCLinkCollapse(NumericalFailure):
    """DC-link voltage of a matching-controlled node reached zero or below."""


class ConvergenceError(NumericalFailure):
    """Iterative eigen-solver hit its rotation cap."""
