from abc import ABC, ABCMeta
from enum import Enum, EnumMeta, unique
from typing import Any, Callable
from functools import wraps


def _pretty_raise_enum(cls: EnumMeta, fun: Callable) -> Callable:
    @wraps(fun)
    def wrapper(*args, **kwargs) -> Enum:
        try:
            return fun(*args, **kwargs)
        except ValueError as e:
            _cls, value, *_ = args
            e.args = (cls._format(value),)
            raise e

    if not issubclass(cls, ErrorFormatter):
        raise TypeError(f"Class `{cls}` must be subtype of `ErrorFormatter`.")
    elif not len(cls.__members__):
        # empty enum, for class hierarchy
        return fun

    return wrapper


class ErrorFormatter(ABC):  # noqa: D101
    __error_format__ = "Invalid value `{}` for `{}`. Valid options are: `{}`."

    @classmethod
    def _format(cls, value: Any) -> str:
        """Format the error message for invalid ``value``."""
        return cls.__error_format__.format(
            value, cls.__name__, [m.value for m in cls.__members__.values()]
        )


class FormatterMeta(EnumMeta, ABCMeta):  # noqa: D101
    def __new__(cls, clsname, superclasses, attributedict):  # noqa: D102
        res = super().__new__(cls, clsname, superclasses, attributedict)
        res.__new__ = _pretty_raise_enum(res, res.__new__)
        return res


class PrettyEnumMixin(ErrorFormatter, Enum, metaclass=FormatterMeta):
    """Enum mixin that pretty prints when user uses invalid value."""

    def __repr__(self):
        return f"<{self.__class__.__name__}.{self.name}>"


@unique
class BarrierKind(PrettyEnumMixin):
    """Obstacle avoidance constraint used by the controller."""

    ED = "ed"  #: Euclidean-distance CBF with a higher-order term.
    TC = "tc"  #: Turning-circle CBF.
    DC = "dc"  #: Plain distance constraint, no decay law.

    @property
    def label(self) -> str:
        """Controller label used in tables and plots."""
        return {"ed": "MPC-EDCBF", "tc": "MPC-TCCBF", "dc": "MPC-DC"}[self.value]


@unique
class VehicleKind(PrettyEnumMixin):
    """Vehicle model."""

    UNICYCLE = "unicycle"  #: State ``(x, y, psi, u)``, input ``(r, a)``.
    ASV = "asv"  #: State ``(x, y, psi, u, v, r)``, input ``(F_l, F_r)``.

    def __new__(cls, value: str):  # noqa: D102
        obj = object.__new__(cls)
        obj._value_ = value
        obj._dims = {"unicycle": (4, 2), "asv": (6, 2)}[value]
        return obj

    @property
    def nx(self) -> int:
        """Number of states."""
        return self._dims[0]

    @property
    def nu(self) -> int:
        """Number of inputs."""
        return self._dims[1]


@unique
class SolverStatus(PrettyEnumMixin):
    """Termination cause of the SQP solver."""

    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DEGRADED_FEASIBILITY = "degraded_feasibility"


@unique
class RunStatus(PrettyEnumMixin):
    """Outcome of a closed-loop run."""

    ARRIVED = "arrived"
    TIMEOUT = "timeout"
    FAILED = "failed"


@unique
class ScenarioName(PrettyEnumMixin):
    """Builtin scenarios."""

    UNICYCLE_STATIC = "unicycle-static"
    UNICYCLE_HEADON = "unicycle-headon"
    UNICYCLE_OVERTAKING = "unicycle-overtaking"
    ASV_STATIC = "asv-static"
    ASV_HEADON = "asv-headon"
    ASV_OVERTAKING = "asv-overtaking"


@unique
class ExitCode(int, Enum):
    """Exit codes of the command line interface."""

    OK = 0
    CONFIG_ERROR = 2
    UNKNOWN_SCENARIO = 3
    OUTPUT_ERROR = 4
    SOLVER_FAILURE = 5
    TIMEOUT = 6


__all__ = [
    BarrierKind,
    VehicleKind,
    SolverStatus,
    RunStatus,
    ScenarioName,
    ExitCode,
]
