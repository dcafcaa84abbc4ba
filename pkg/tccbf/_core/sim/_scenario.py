from typing import Any, Dict, Tuple, Union, Mapping, Optional, Sequence
from pathlib import Path
import json
import logging

import attr

import numpy as np

from tccbf.constants import BarrierKind, VehicleKind, ScenarioName
from tccbf._core.mpc._config import MpcConfig, default_mpc_config
from tccbf._core.utils._errors import ConfigError, UnknownScenarioError
from tccbf._core.models._asv import AsvModel, AsvParams, load_asv_params
from tccbf._core.models._unicycle import UnicycleModel
from tccbf._core.barrier._geometry import Obstacle, BarrierConfig
from tccbf._core.models._integrate import Model_t

__all__ = [
    "Scenario",
    "builtin_scenarios",
    "get_scenario",
    "load_scenario",
    "propagate_obstacles",
]


def _to_floats(value: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.ravel(np.asarray(value, dtype=float)))


def _to_obstacles(value: Sequence[Union[Obstacle, Mapping[str, float]]]) -> Tuple[Obstacle, ...]:
    return tuple(o if isinstance(o, Obstacle) else Obstacle(**o) for o in value)


def _to_barrier(value: Union[BarrierConfig, Mapping[str, Any]]) -> BarrierConfig:
    return value if isinstance(value, BarrierConfig) else BarrierConfig(**value)


def _to_mpc(value: Union[MpcConfig, Mapping[str, Any]]) -> MpcConfig:
    return value if isinstance(value, MpcConfig) else MpcConfig(**value)


def _to_params(value: Union[None, AsvParams, Mapping[str, float]]) -> Optional[AsvParams]:
    if value is None or isinstance(value, AsvParams):
        return value
    return AsvParams.from_dict(dict(value))


def _positive(_instance, attribute: attr.Attribute, value: float) -> None:
    if not value > 0:
        raise ValueError(f"Expected `{attribute.name}` to be positive, found `{value}`.")


@attr.s(frozen=True)
class Scenario:
    """
    Closed-loop experiment: vehicle, start, goal, obstacles and controller settings.

    Parameters
    ----------
    name
        Free-form name, echoed in logs and tables.
    vehicle
        Vehicle model.
    x_init
        Initial state.
    u_prev
        Input assumed applied before the start, used by the first input-rate term.
    goal_x
        The run ends once the vehicle reaches this x-position [m].
    u_r
        Reference speed [m/s].
    obstacles
        Obstacles at time zero.
    barrier
        Barrier kind and parameters.
    mpc
        Controller settings.
    max_time
        The run is flagged as timed out after this many seconds.
    asv_params
        Vessel parameters; `None` uses the bundled ones. Ignored for the unicycle.
    """

    name: str = attr.ib(converter=str)
    vehicle: VehicleKind = attr.ib(converter=VehicleKind)
    x_init: Tuple[float, ...] = attr.ib(converter=_to_floats)
    u_prev: Tuple[float, ...] = attr.ib(converter=_to_floats)
    goal_x: float = attr.ib(converter=float)
    u_r: float = attr.ib(converter=float)
    obstacles: Tuple[Obstacle, ...] = attr.ib(converter=_to_obstacles)
    barrier: BarrierConfig = attr.ib(converter=_to_barrier)
    mpc: MpcConfig = attr.ib(converter=_to_mpc)
    max_time: float = attr.ib(converter=float, validator=_positive)
    asv_params: Optional[AsvParams] = attr.ib(default=None, converter=_to_params)

    def __attrs_post_init__(self):
        nx, nu = self.vehicle.nx, self.vehicle.nu
        if len(self.x_init) != nx:
            raise ConfigError(
                f"Expected `x_init` to have `{nx}` entries, found `{len(self.x_init)}`."
            )
        if len(self.u_prev) != nu:
            raise ConfigError(
                f"Expected `u_prev` to have `{nu}` entries, found `{len(self.u_prev)}`."
            )
        if not self.goal_x > self.x_init[0]:
            raise ConfigError(
                f"Expected `goal_x` to lie beyond the initial x-position `{self.x_init[0]}`, "
                f"found `{self.goal_x}`."
            )
        try:
            self.mpc.check_dims(nx, nu)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    @property
    def T_s(self) -> float:
        """Sampling time [s]."""
        return self.mpc.T_s

    def model(self) -> Model_t:
        """Return the vehicle model."""
        if self.vehicle == VehicleKind.UNICYCLE:
            return UnicycleModel()
        return AsvModel(load_asv_params() if self.asv_params is None else self.asv_params)

    def with_barrier(self, kind: Union[str, BarrierKind]) -> "Scenario":
        """Return a copy enforcing barrier ``kind``."""
        return attr.evolve(self, barrier=attr.evolve(self.barrier, kind=kind))

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Scenario":
        """
        Return a copy with fields replaced.

        Parameters
        ----------
        overrides
            Nested mapping shaped like :meth:`to_dict`; nested mappings are merged.

        Raises
        ------
        ConfigError
            If a key does not name a field.
        """
        return Scenario.from_dict(_merge(self.to_dict(), overrides))

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-compatible dictionary holding every field."""
        return {
            "name": self.name,
            "vehicle": self.vehicle.value,
            "x_init": list(self.x_init),
            "u_prev": list(self.u_prev),
            "goal_x": self.goal_x,
            "u_r": self.u_r,
            "obstacles": [o.to_dict() for o in self.obstacles],
            "barrier": self.barrier.to_dict(),
            "mpc": _jsonify(self.mpc.to_dict()),
            "max_time": self.max_time,
            "asv_params": None if self.asv_params is None else self.asv_params.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        """
        Create a scenario from :meth:`to_dict` output.

        Raises
        ------
        ConfigError
            On unknown or missing keys, or invalid values.
        """
        names = {a.name for a in attr.fields(cls)}
        required = {a.name for a in attr.fields(cls) if a.default is attr.NOTHING}
        unknown, missing = set(data) - names, required - set(data)
        if unknown:
            raise ConfigError(f"Unknown scenario fields: `{sorted(unknown)}`.")
        if missing:
            raise ConfigError(f"Missing scenario fields: `{sorted(missing)}`.")

        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None


def _jsonify(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    return value


def _merge(base: Mapping[str, Any], overrides: Mapping[str, Any], prefix: str = "") -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if key not in base:
            raise ConfigError(f"Unknown scenario field `{prefix}{key}`.")
        if isinstance(base[key], Mapping) and isinstance(value, Mapping):
            out[key] = _merge(base[key], value, prefix=f"{prefix}{key}.")
        else:
            out[key] = value

    return out


def _unicycle(name: ScenarioName, obstacle: Obstacle, goal_x: float) -> Scenario:
    barrier = BarrierConfig(
        kind=BarrierKind.TC, alpha=0.5, alpha_e=0.05, alpha_t=0.05, r_max=0.3, R_s=0.5, k=5
    )
    return Scenario(
        name=name.value,
        vehicle=VehicleKind.UNICYCLE,
        x_init=(0.0, 0.0, 0.0, 2.0),
        u_prev=(0.0, 0.0),
        goal_x=goal_x,
        u_r=2.0,
        obstacles=(obstacle,),
        barrier=barrier,
        mpc=default_mpc_config(VehicleKind.UNICYCLE, r_max=barrier.r_max),
        max_time=60.0,
    )


def _asv(name: ScenarioName, obstacle: Obstacle) -> Scenario:
    u_r = 0.9
    model = AsvModel(load_asv_params())
    return Scenario(
        name=name.value,
        vehicle=VehicleKind.ASV,
        x_init=(0.0, 0.0, 0.0, u_r, 0.0, 0.0),
        u_prev=model.steady_thrust(u_r),
        goal_x=36.0,
        u_r=u_r,
        obstacles=(obstacle,),
        barrier=BarrierConfig(
            kind=BarrierKind.TC, alpha=1.0, alpha_e=0.015, alpha_t=0.02, r_max=0.2, R_s=1.0, k=5
        ),
        mpc=default_mpc_config(VehicleKind.ASV),
        max_time=90.0,
    )


def builtin_scenarios() -> Dict[str, Scenario]:
    """
    Return the catalog of builtin scenarios.

    The unicycle starts at the origin with 2 m/s; the vessel starts at the origin with
    0.9 m/s. Both follow the x-axis and default to the turning-circle barrier.

    Returns
    -------
    :class:`dict`
        Scenarios keyed by their :class:`tccbf.constants.ScenarioName` value.
    """
    return {
        s.name: s
        for s in (
            _unicycle(ScenarioName.UNICYCLE_STATIC, Obstacle(15, 0, 2.0), goal_x=40.0),
            _unicycle(ScenarioName.UNICYCLE_HEADON, Obstacle(30, 0, 1.0, vx=-0.75), goal_x=50.0),
            _unicycle(ScenarioName.UNICYCLE_OVERTAKING, Obstacle(10, 0, 1.0, vx=0.5), goal_x=40.0),
            _asv(ScenarioName.ASV_STATIC, Obstacle(16, 0, 4.0)),
            _asv(ScenarioName.ASV_HEADON, Obstacle(32, 0, 4.0, vx=-0.3)),
            _asv(ScenarioName.ASV_OVERTAKING, Obstacle(8, 0, 4.0, vx=0.3)),
        )
    }


def get_scenario(name: Union[str, ScenarioName]) -> Scenario:
    """
    Return a builtin scenario by name.

    Raises
    ------
    UnknownScenarioError
        If ``name`` is not in the catalog.
    """
    try:
        return builtin_scenarios()[ScenarioName(name).value]
    except ValueError as e:
        raise UnknownScenarioError(f"unknown scenario `{name}`. {e}") from None


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Read a scenario from a JSON file.

    The file holds either a full scenario, a builtin name under ``"base"`` plus field
    overrides, or a run sidecar with the scenario under ``"scenario"``.

    Parameters
    ----------
    path
        Path to the file.

    Returns
    -------
    :class:`Scenario`
        The scenario.
    """
    path = Path(path)
    logging.debug(f"Reading scenario from `{path}`")
    try:
        with open(path) as fin:
            data = json.load(fin)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Unable to read scenario file `{path}`: {e}") from None

    if not isinstance(data, dict):
        raise ConfigError(f"Expected a JSON object in `{path}`, found `{type(data).__name__}`.")
    if isinstance(data.get("scenario"), dict):
        data = data["scenario"]
    if "base" in data:
        overrides = {k: v for k, v in data.items() if k != "base"}
        return get_scenario(data["base"]).with_overrides(overrides)

    return Scenario.from_dict(data)


def propagate_obstacles(obstacles: Sequence[Obstacle], t: float) -> Tuple[Obstacle, ...]:
    """
    Move each obstacle with its constant velocity.

    Parameters
    ----------
    obstacles
        Obstacles at time zero.
    t
        Elapsed time [s].

    Returns
    -------
    :class:`tuple`
        The obstacles at time ``t``; radii and velocities are unchanged.
    """
    if t < 0:
        raise ValueError(f"Expected `t` to be non-negative, found `{t}`.")

    return tuple(o.at(t) for o in obstacles)
