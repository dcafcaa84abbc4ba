from typing import Tuple, Union, Optional

import attr

import numpy as np

from tccbf.constants import BarrierKind


def _finite(_instance, attribute: attr.Attribute, value: float) -> None:
    if not np.isfinite(value):
        raise ValueError(f"Expected `{attribute.name}` to be finite, found `{value}`.")


def _positive(_instance, attribute: attr.Attribute, value: float) -> None:
    if not value > 0:
        raise ValueError(f"Expected `{attribute.name}` to be positive, found `{value}`.")


def _non_negative(_instance, attribute: attr.Attribute, value: float) -> None:
    if value < 0:
        raise ValueError(
            f"Expected `{attribute.name}` to be non-negative, found `{value}`."
        )


def _unit_decay(_instance, attribute: attr.Attribute, value: float) -> None:
    if not 0 < value <= 1:
        raise ValueError(
            f"Expected `{attribute.name}` to be in the interval `(0, 1]`, found `{value}`."
        )


@attr.s(frozen=True)
class Obstacle:
    """
    Circular obstacle moving with constant planar velocity.

    Parameters
    ----------
    ox, oy
        Center [m].
    o_r
        Radius [m].
    vx, vy
        Velocity [m/s].
    """

    ox: float = attr.ib(converter=float, validator=_finite)
    oy: float = attr.ib(converter=float, validator=_finite)
    o_r: float = attr.ib(converter=float, validator=[_finite, _positive])
    vx: float = attr.ib(default=0.0, converter=float, validator=_finite)
    vy: float = attr.ib(default=0.0, converter=float, validator=_finite)

    @property
    def is_static(self) -> bool:
        """Whether the obstacle does not move."""
        return self.vx == 0 and self.vy == 0

    def at(self, t: float) -> "Obstacle":
        """Return the obstacle extrapolated ``t`` seconds ahead."""
        if t == 0:
            return self
        return attr.evolve(self, ox=self.ox + self.vx * t, oy=self.oy + self.vy * t)

    def to_dict(self) -> dict:  # noqa: D102
        return attr.asdict(self)


@attr.s(frozen=True)
class PlanarKinematicPose:
    """
    Position, direction of travel and ground speed of a vehicle.

    For a unicycle, ``course`` is the heading and ``speed`` the forward speed. For a surface
    vessel, they are the course and speed over ground.
    """

    x: float = attr.ib(converter=float, validator=_finite)
    y: float = attr.ib(converter=float, validator=_finite)
    course: float = attr.ib(default=0.0, converter=float, validator=_finite)
    speed: float = attr.ib(default=0.0, converter=float, validator=[_finite, _non_negative])

    @property
    def velocity(self) -> Tuple[float, float]:
        """Ground velocity ``(x_dot, y_dot)``."""
        return self.speed * np.cos(self.course), self.speed * np.sin(self.course)


@attr.s(frozen=True)
class BarrierConfig:
    """
    Parameters of the obstacle avoidance constraints.

    Parameters
    ----------
    kind
        Which constraint the controller enforces. :attr:`BarrierKind.DC` ignores all gains.
    alpha
        Gain of the higher-order Euclidean barrier [1/s].
    alpha_e
        Discrete decay rate of the Euclidean barrier.
    alpha_t
        Discrete decay rate of the turning-circle barrier.
    r_max
        Maximum turning rate used for the turning circles [rad/s].
    R_s
        Safety radius of the vehicle [m].
    k
        Smoothing parameter of the smooth maximum.
    """

    kind: BarrierKind = attr.ib(
        default=BarrierKind.TC,
        converter=BarrierKind,
    )
    alpha: float = attr.ib(default=0.5, converter=float, validator=_positive)
    alpha_e: float = attr.ib(default=0.05, converter=float, validator=_unit_decay)
    alpha_t: float = attr.ib(default=0.05, converter=float, validator=_unit_decay)
    r_max: float = attr.ib(default=0.3, converter=float, validator=_positive)
    R_s: float = attr.ib(default=0.5, converter=float, validator=_non_negative)
    k: float = attr.ib(default=5.0, converter=float, validator=_positive)

    @property
    def decay(self) -> Optional[float]:
        """Decay rate of the active barrier, `None` for :attr:`BarrierKind.DC`."""
        return {
            BarrierKind.ED: self.alpha_e,
            BarrierKind.TC: self.alpha_t,
            BarrierKind.DC: None,
        }[self.kind]

    def to_dict(self) -> dict:  # noqa: D102
        return {**attr.asdict(self), "kind": self.kind.value}


def turning_radius(speed: float, r_max: float) -> float:
    """
    Return the radius of the tightest turn at ``speed``.

    Parameters
    ----------
    speed
        Ground speed [m/s].
    r_max
        Maximum turning rate [rad/s].

    Returns
    -------
    :class:`float`
        ``|speed| / r_max``; reversing turns on circles of the same size.
    """
    if not r_max > 0:
        raise ValueError(f"Expected `r_max` to be positive, found `{r_max}`.")

    return np.abs(speed) / r_max


def turning_centers(
    pose: PlanarKinematicPose, R: Union[float, np.ndarray]
) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """
    Return the centers of the right and left turning circles.

    Parameters
    ----------
    pose
        Pose of the vehicle.
    R
        Turning radius [m].

    Returns
    -------
    :class:`tuple`
        ``((x_right, y_right), (x_left, y_left))``, at distance ``R`` from the position along
        ``course -/+ pi/2``.
    """
    s, c = np.sin(pose.course), np.cos(pose.course)

    return (pose.x + R * s, pose.y - R * c), (pose.x - R * s, pose.y + R * c)
