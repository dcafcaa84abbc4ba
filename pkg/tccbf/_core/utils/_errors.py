from typing import Any, Dict, Optional


class ConfigError(ValueError):
    """Raised when a scenario, grid or run configuration is invalid."""


class UnknownScenarioError(ConfigError):
    """Raised when a scenario name is not in the builtin catalog."""


class QpInfeasibleError(RuntimeError):
    """Raised when a QP subproblem has no feasible point."""


class NumericalFailureError(RuntimeError):
    """
    Raised when a `NaN` or `Inf` shows up while evaluating the NLP.

    Parameters
    ----------
    where
        Name of the evaluation that failed.
    iterate
        Snapshot of the iterate, for diagnosis.
    """

    def __init__(self, where: str, iterate: Optional[Dict[str, Any]] = None):
        super().__init__(f"numerical failure in `{where}`")
        self.where = where
        self.iterate = {} if iterate is None else iterate
