from typing import Tuple, Union, Sequence
from pathlib import Path
import json
import logging

import attr

import numpy as np

from tccbf.constants import VehicleKind
from tccbf._core.utils._errors import ConfigError
from tccbf._core.models._unicycle import _field

_DEFAULT_PARAMS = Path(__file__).parent.parent.parent / "_data" / "asv_params.json"


def _positive(_instance, attribute: attr.Attribute, value: float) -> None:
    if not value > 0:
        raise ValueError(f"Expected `{attribute.name}` to be positive, found `{value}`.")


def _non_positive(_instance, attribute: attr.Attribute, value: float) -> None:
    if value > 0:
        raise ValueError(
            f"Expected `{attribute.name}` to be non-positive (dissipative), found `{value}`."
        )


@attr.s(frozen=True)
class AsvState:
    """
    Pose and body-fixed velocity of a surface vessel.

    Parameters
    ----------
    x, y
        Position [m].
    psi
        Unwrapped heading [rad].
    u
        Surge speed [m/s].
    v
        Sway speed [m/s].
    r
        Yaw rate [rad/s].
    """

    x: float = attr.ib(**_field)
    y: float = attr.ib(**_field)
    psi: float = attr.ib(**_field)
    u: float = attr.ib(**_field)
    v: float = attr.ib(**_field)
    r: float = attr.ib(**_field)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.array(attr.astuple(self), dtype=dtype)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "AsvState":
        """Create the state from a vector ``(x, y, psi, u, v, r)``."""
        return cls(*np.asarray(values, dtype=float).ravel()[:6])


@attr.s(frozen=True)
class AsvInput:
    """Left and right thruster forces [N]."""

    F_l: float = attr.ib(**_field)
    F_r: float = attr.ib(**_field)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.array(attr.astuple(self), dtype=dtype)


@attr.s(frozen=True)
class AsvParams:
    """
    Inertia, damping and thruster geometry of a 3-DOF surface vessel.

    The damping matrix is ``D(nu) = -[[X_u + X_uu|u|, 0, 0], [0, Y_v + Y_vv|v|, Y_r],
    [0, N_v, N_r + N_rrr r^2]]``.
    """

    m11: float = attr.ib(converter=float, validator=_positive)
    m22: float = attr.ib(converter=float, validator=_positive)
    m33: float = attr.ib(converter=float, validator=_positive)
    X_u: float = attr.ib(converter=float, validator=_non_positive)
    X_uu: float = attr.ib(converter=float)
    Y_v: float = attr.ib(converter=float, validator=_non_positive)
    Y_vv: float = attr.ib(converter=float)
    Y_r: float = attr.ib(converter=float)
    N_v: float = attr.ib(converter=float)
    N_r: float = attr.ib(converter=float, validator=_non_positive)
    N_rrr: float = attr.ib(converter=float)
    l: float = attr.ib(converter=float, validator=_positive)  # noqa: E741

    @classmethod
    def from_dict(cls, data: dict) -> "AsvParams":
        """Create the parameters from a flat mapping with exactly the field names."""
        names = {a.name for a in attr.fields(cls)}
        unknown, missing = set(data) - names, names - set(data)
        if unknown:
            raise ConfigError(f"Unknown ASV parameters: `{sorted(unknown)}`.")
        if missing:
            raise ConfigError(f"Missing ASV parameters: `{sorted(missing)}`.")

        return cls(**data)

    def to_dict(self) -> dict:
        """Return the parameters as a flat mapping."""
        return attr.asdict(self)


def load_asv_params(path: Union[str, Path, None] = None) -> AsvParams:
    """
    Read ASV parameters from a JSON file.

    Parameters
    ----------
    path
        JSON file with exactly the field names of :class:`AsvParams`. If `None`, the bundled
        placeholder parameters of a small catamaran are used.

    Returns
    -------
    :class:`AsvParams`
        The parameters.
    """
    path = _DEFAULT_PARAMS if path is None else Path(path)
    logging.debug(f"Reading ASV parameters from `{path}`")

    with open(path) as fin:
        return AsvParams.from_dict(json.load(fin))


def thrust_allocation(F_l: float, F_r: float, l: float) -> Tuple[float, float]:  # noqa: E741
    """
    Map thruster forces to surge force and yaw moment.

    Parameters
    ----------
    F_l, F_r
        Left and right thrust [N].
    l
        Moment arm of the thrusters [m].

    Returns
    -------
    :class:`tuple`
        ``(tau_X, tau_N)``.
    """
    return F_l + F_r, (-F_l + F_r) * l


def coriolis_matrix(nu: Sequence[float], p: AsvParams) -> np.ndarray:
    """Return the skew-symmetric Coriolis-centripetal matrix ``C(nu)``."""
    u, v, _ = nu
    return np.array(
        [
            [0.0, 0.0, -p.m22 * v],
            [0.0, 0.0, p.m11 * u],
            [p.m22 * v, -p.m11 * u, 0.0],
        ]
    )


def damping_matrix(nu: Sequence[float], p: AsvParams) -> np.ndarray:
    """Return the damping matrix ``D(nu)``."""
    u, v, r = nu
    return -np.array(
        [
            [p.X_u + p.X_uu * abs(u), 0.0, 0.0],
            [0.0, p.Y_v + p.Y_vv * abs(v), p.Y_r],
            [0.0, p.N_v, p.N_r + p.N_rrr * r**2],
        ]
    )


def asv_deriv(state: Sequence[float], inp: Sequence[float], p: AsvParams) -> np.ndarray:
    """
    Evaluate the 3-DOF surface vessel model.

    Parameters
    ----------
    state
        :class:`AsvState` or vector ``(x, y, psi, u, v, r)``.
    inp
        :class:`AsvInput` or vector ``(F_l, F_r)``.
    p
        Vessel parameters.

    Returns
    -------
    :class:`numpy.ndarray`
        ``(R(psi) nu, M^-1 (tau - C(nu) nu - D(nu) nu))``.
    """
    _, _, psi, u, v, r = np.asarray(state, dtype=float)
    F_l, F_r = np.asarray(inp, dtype=float)
    nu = np.array([u, v, r])
    c, s = np.cos(psi), np.sin(psi)

    tau_X, tau_N = thrust_allocation(F_l, F_r, p.l)
    tau = np.array([tau_X, 0.0, tau_N])
    nu_dot = (tau - coriolis_matrix(nu, p) @ nu - damping_matrix(nu, p) @ nu) / np.array(
        [p.m11, p.m22, p.m33]
    )

    return np.array([u * c - v * s, u * s + v * c, r, *nu_dot])


def asv_jacobians(
    state: Sequence[float], inp: Sequence[float], p: AsvParams
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the Jacobians of :func:`asv_deriv` w.r.t. the state and the input."""
    _, _, psi, u, v, r = np.asarray(state, dtype=float)
    c, s = np.cos(psi), np.sin(psi)
    dm = p.m22 - p.m11

    A = np.zeros((6, 6))
    A[0, 2:5] = -u * s - v * c, c, -s
    A[1, 2:5] = u * c - v * s, s, c
    A[2, 5] = 1.0
    A[3, 3:6] = (
        (p.X_u + 2 * p.X_uu * abs(u)) / p.m11,
        p.m22 * r / p.m11,
        p.m22 * v / p.m11,
    )
    A[4, 3:6] = (
        -p.m11 * r / p.m22,
        (p.Y_v + 2 * p.Y_vv * abs(v)) / p.m22,
        (p.Y_r - p.m11 * u) / p.m22,
    )
    A[5, 3:6] = (
        -dm * v / p.m33,
        (p.N_v - dm * u) / p.m33,
        (p.N_r + 3 * p.N_rrr * r**2) / p.m33,
    )

    B = np.zeros((6, 2))
    B[3] = 1.0 / p.m11
    B[5] = -p.l / p.m33, p.l / p.m33

    return A, B


def sog_cog(state: Sequence[float]) -> Tuple[float, float]:
    """
    Return speed and course over ground of a surface vessel.

    Parameters
    ----------
    state
        :class:`AsvState` or vector ``(x, y, psi, u, v, r)``.

    Returns
    -------
    :class:`tuple`
        ``(V, psi_w)`` with ``V = sqrt(u^2 + v^2)`` and ``psi_w = psi + atan2(v, u)``.

    Raises
    ------
    ValueError
        If both ``u`` and ``v`` are zero.
    """
    _, _, psi, u, v, _ = np.asarray(state, dtype=float)
    if u == 0 and v == 0:
        raise ValueError("course undefined at zero speed-over-ground")

    return float(np.hypot(u, v)), float(psi + np.arctan2(v, u))


@attr.s(frozen=True)
class AsvModel:
    """
    Surface vessel dynamics bundled with their Jacobians.

    Parameters
    ----------
    params
        Vessel parameters.
    """

    params: AsvParams = attr.ib(validator=attr.validators.instance_of(AsvParams))

    kind = VehicleKind.ASV
    nx = 6
    nu = 2
    yaw_input = (-1.0, 1.0)

    def deriv(self, state: Sequence[float], inp: Sequence[float]) -> np.ndarray:
        """See :func:`asv_deriv`."""
        return asv_deriv(state, inp, self.params)

    def jacobians(
        self, state: Sequence[float], inp: Sequence[float]
    ) -> Tuple[np.ndarray, np.ndarray]:
        """See :func:`asv_jacobians`."""
        return asv_jacobians(state, inp, self.params)

    def kinematics(self, state: Sequence[float]) -> Tuple[float, float, float, float]:
        """
        Return ``(x, y, course, speed)`` over ground.

        Unlike :func:`sog_cog`, a vessel at rest gets a ground speed of zero along its heading.
        """
        x, y, psi, u, v, _ = np.asarray(state, dtype=float)[:6]
        if u == 0 and v == 0:
            return x, y, psi, 0.0
        V, course = sog_cog(state)
        return x, y, course, V

    def kinematics_jacobian(self, state: Sequence[float]) -> np.ndarray:
        """Return the Jacobian of :meth:`kinematics` w.r.t. the state."""
        _, _, _, u, v, _ = np.asarray(state, dtype=float)[:6]
        V2 = max(u * u + v * v, 1e-12)
        V = np.sqrt(V2)

        J = np.zeros((4, 6))
        J[0, 0] = J[1, 1] = J[2, 2] = 1.0
        J[2, 3], J[2, 4] = -v / V2, u / V2
        J[3, 3], J[3, 4] = u / V, v / V

        return J

    def steady_thrust(self, speed: float) -> np.ndarray:
        """Return the symmetric thrust holding a straight course at surge ``speed``."""
        p = self.params
        tau_X = -(p.X_u + p.X_uu * abs(speed)) * speed
        return np.array([tau_X / 2, tau_X / 2])
