from typing import Tuple, Sequence

import attr

import numpy as np

from tccbf.constants import VehicleKind


def _finite(_instance, attribute: attr.Attribute, value: float) -> None:
    if not np.isfinite(value):
        raise ValueError(f"Expected `{attribute.name}` to be finite, found `{value}`.")


_field = dict(converter=float, validator=_finite)


@attr.s(frozen=True)
class UnicycleState:
    """
    Pose and forward speed of a unicycle.

    Parameters
    ----------
    x
        Position east-ish [m].
    y
        Position north-ish [m].
    psi
        Unwrapped heading [rad].
    u
        Forward speed [m/s]. Negative speed is allowed by the model.
    """

    x: float = attr.ib(**_field)
    y: float = attr.ib(**_field)
    psi: float = attr.ib(**_field)
    u: float = attr.ib(**_field)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.array(attr.astuple(self), dtype=dtype)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "UnicycleState":
        """Create the state from a vector ``(x, y, psi, u)``."""
        return cls(*np.asarray(values, dtype=float).ravel()[:4])


@attr.s(frozen=True)
class UnicycleInput:
    """
    Unicycle control input.

    Parameters
    ----------
    r
        Turn rate [rad/s].
    a
        Forward acceleration [m/s^2].
    """

    r: float = attr.ib(**_field)
    a: float = attr.ib(**_field)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.array(attr.astuple(self), dtype=dtype)


def unicycle_deriv(state: Sequence[float], inp: Sequence[float]) -> np.ndarray:
    """
    Evaluate the nonholonomic unicycle model.

    Parameters
    ----------
    state
        :class:`UnicycleState` or vector ``(x, y, psi, u)``.
    inp
        :class:`UnicycleInput` or vector ``(r, a)``.

    Returns
    -------
    :class:`numpy.ndarray`
        ``(u cos psi, u sin psi, r, a)``.
    """
    _, _, psi, u = np.asarray(state, dtype=float)
    r, a = np.asarray(inp, dtype=float)

    return np.array([u * np.cos(psi), u * np.sin(psi), r, a])


def unicycle_jacobians(
    state: Sequence[float], inp: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the Jacobians of :func:`unicycle_deriv` w.r.t. the state and the input."""
    _, _, psi, u = np.asarray(state, dtype=float)
    c, s = np.cos(psi), np.sin(psi)

    A = np.zeros((4, 4))
    A[0, 2], A[0, 3] = -u * s, c
    A[1, 2], A[1, 3] = u * c, s

    B = np.zeros((4, 2))
    B[2, 0] = B[3, 1] = 1.0

    return A, B


@attr.s(frozen=True)
class UnicycleModel:
    """Unicycle dynamics bundled with their Jacobians."""

    kind = VehicleKind.UNICYCLE
    nx = 4
    nu = 2
    # input direction of a positive (port) yaw
    yaw_input = (1.0, 0.0)

    def deriv(self, state: Sequence[float], inp: Sequence[float]) -> np.ndarray:
        """See :func:`unicycle_deriv`."""
        return unicycle_deriv(state, inp)

    def jacobians(
        self, state: Sequence[float], inp: Sequence[float]
    ) -> Tuple[np.ndarray, np.ndarray]:
        """See :func:`unicycle_jacobians`."""
        return unicycle_jacobians(state, inp)

    def kinematics(self, state: Sequence[float]) -> Tuple[float, float, float, float]:
        """Return ``(x, y, course, speed)``; the course of a unicycle is its heading."""
        x, y, psi, u = np.asarray(state, dtype=float)[:4]
        return x, y, psi, u

    def kinematics_jacobian(self, state: Sequence[float]) -> np.ndarray:
        """Return the Jacobian of :meth:`kinematics` w.r.t. the state."""
        return np.eye(4)
