from typing import Tuple, Union

from scipy.special import expit, logsumexp

import numpy as np

from tccbf.constants import BarrierKind
from tccbf._core.utils._docs import d
from tccbf._core.barrier._geometry import (
    Obstacle,
    BarrierConfig,
    PlanarKinematicPose,
    turning_radius,
)
from tccbf.constants._pkg_constants import EPS_DISTANCE

Array_t = Union[float, np.ndarray]

_LOS_ERROR = "line-of-sight direction undefined"


# vectorized kernels, shared by the scalar API, the NLP and the level-set grids


def _euclid(x: Array_t, y: Array_t, obs: Obstacle, cfg: BarrierConfig) -> np.ndarray:
    return np.hypot(x - obs.ox, y - obs.oy) - (obs.o_r + cfg.R_s)


def _euclid_dot(
    x: Array_t,
    y: Array_t,
    course: Array_t,
    speed: Array_t,
    obs: Obstacle,
    relative: bool = True,
) -> np.ndarray:
    dx, dy = x - obs.ox, y - obs.oy
    dist = np.maximum(np.hypot(dx, dy), EPS_DISTANCE)
    wx, wy = speed * np.cos(course), speed * np.sin(course)
    if relative:
        wx, wy = wx - obs.vx, wy - obs.vy

    return (dx * wx + dy * wy) / dist


def _tc_parts(
    x: Array_t,
    y: Array_t,
    course: Array_t,
    speed: Array_t,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    # reversing at u < 0 travels along course + pi at speed |u|
    course = np.where(np.asarray(speed) < 0, course + np.pi, course)
    R = turning_radius(speed, cfg.r_max)
    s, c = np.sin(course), np.cos(course)
    margin = obs.o_r + cfg.R_s + R
    h_tr = np.hypot(x + R * s - obs.ox, y - R * c - obs.oy) - margin
    h_tl = np.hypot(x - R * s - obs.ox, y + R * c - obs.oy) - margin

    return h_tr, h_tl


def smooth_max(h_tr: Array_t, h_tl: Array_t, k: float) -> np.ndarray:
    """
    Overflow-safe smooth maximum ``(1/k) ln((e^(k h_tr) + e^(k h_tl)) / 2)``.

    Parameters
    ----------
    h_tr, h_tl
        Arguments.
    k
        Smoothing parameter; the result approaches ``max(h_tr, h_tl)`` from below as ``k`` grows.

    Returns
    -------
    :class:`numpy.ndarray`
        The smooth maximum, within ``ln(2) / k`` of the true maximum.
    """
    if np.any(np.asarray(k) <= 0):
        raise ValueError(f"Expected `k` to be positive, found `{k}`.")

    h = np.stack(np.broadcast_arrays(np.asarray(h_tr, float), np.asarray(h_tl, float)))
    top = h.max(axis=0)

    return top + logsumexp(k * (h - top), axis=0, b=0.5) / k


def _value(
    kind: BarrierKind,
    x: Array_t,
    y: Array_t,
    course: Array_t,
    speed: Array_t,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> np.ndarray:
    kind = BarrierKind(kind)
    if kind == BarrierKind.DC:
        return _euclid(x, y, obs, cfg)
    if kind == BarrierKind.ED:
        return _euclid_dot(x, y, course, speed, obs) + cfg.alpha * _euclid(x, y, obs, cfg)

    return smooth_max(*_tc_parts(x, y, course, speed, obs, cfg), cfg.k)


def _check_line_of_sight(pose: PlanarKinematicPose, obs: Obstacle) -> None:
    if np.hypot(pose.x - obs.ox, pose.y - obs.oy) < EPS_DISTANCE:
        raise ValueError(_LOS_ERROR)


# scalar API


@d.dedent
def euclid_h(pose: PlanarKinematicPose, obs: Obstacle, cfg: BarrierConfig) -> float:
    """
    Distance to the obstacle boundary minus the safety radius.

    Parameters
    ----------
    %(pose)s
    %(obstacle)s
    %(cfg)s

    Returns
    -------
    :class:`float`
        ``sqrt((x - o_x)^2 + (y - o_y)^2) - (o_r + R_s)`` [m].
    """
    return float(_euclid(pose.x, pose.y, obs, cfg))


@d.dedent
def euclid_h_dot(
    pose: PlanarKinematicPose, obs: Obstacle, relative: bool = False
) -> float:
    """
    Rate of change of :func:`euclid_h`, i.e. the velocity projected on the line of sight.

    Parameters
    ----------
    %(pose)s
    %(obstacle)s
    relative
        Whether to use the velocity relative to the obstacle.

    Returns
    -------
    :class:`float`
        The closing rate [m/s]; negative when approaching.

    Raises
    ------
    ValueError
        If the vehicle is within ``1e-6`` m of the obstacle center.
    """
    _check_line_of_sight(pose, obs)
    return float(_euclid_dot(pose.x, pose.y, pose.course, pose.speed, obs, relative))


@d.dedent
def ed_cbf(
    pose: PlanarKinematicPose, obs: Obstacle, cfg: BarrierConfig, relative: bool = True
) -> float:
    """
    Higher-order Euclidean-distance barrier ``h_dot + alpha h``.

    Parameters
    ----------
    %(pose)s
    %(obstacle)s
    %(cfg)s
    relative
        Whether ``h_dot`` uses the velocity relative to the obstacle.

    Returns
    -------
    :class:`float`
        The barrier value.
    """
    return euclid_h_dot(pose, obs, relative=relative) + cfg.alpha * euclid_h(pose, obs, cfg)


@d.dedent
def tc_components(
    pose: PlanarKinematicPose, obs: Obstacle, cfg: BarrierConfig
) -> Tuple[float, float]:
    """
    Clearance of the right and left turning circles.

    Parameters
    ----------
    %(pose)s
    %(obstacle)s
    %(cfg)s

    Returns
    -------
    :class:`tuple`
        ``(h_tr, h_tl)``, the distances of the turning-circle centers to the obstacle center
        minus ``o_r + R_s + R``.
    """
    h_tr, h_tl = _tc_parts(pose.x, pose.y, pose.course, pose.speed, obs, cfg)
    return float(h_tr), float(h_tl)


@d.dedent
def tc_cbf(pose: PlanarKinematicPose, obs: Obstacle, cfg: BarrierConfig) -> float:
    """
    Turning-circle barrier, the smooth maximum of :func:`tc_components`.

    Parameters
    ----------
    %(pose)s
    %(obstacle)s
    %(cfg)s

    Returns
    -------
    :class:`float`
        The barrier value. Non-negative values imply that at least one turning circle clears
        the obstacle.
    """
    return float(smooth_max(*tc_components(pose, obs, cfg), cfg.k))


def barrier_value(
    kind: Union[str, BarrierKind],
    pose: PlanarKinematicPose,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> float:
    """Evaluate the barrier of ``kind``; :attr:`BarrierKind.DC` is :func:`euclid_h`."""
    kind = BarrierKind(kind)
    if kind == BarrierKind.ED:
        _check_line_of_sight(pose, obs)

    return float(_value(kind, pose.x, pose.y, pose.course, pose.speed, obs, cfg))


def discrete_cbf_residual(h_now: float, h_next: float, decay: float) -> float:
    """
    Residual of the discrete-time barrier condition ``h_next - h_now + decay h_now``.

    Parameters
    ----------
    h_now
        Barrier value at the current step.
    h_next
        Barrier value at the next step.
    decay
        Decay rate in ``(0, 1]``.

    Returns
    -------
    :class:`float`
        Non-negative iff ``h_next >= (1 - decay) h_now``.
    """
    if not 0 < decay <= 1:
        raise ValueError(f"Expected `decay` to be in the interval `(0, 1]`, found `{decay}`.")

    return (h_next - h_now) + decay * h_now


def _gradient(
    kind: BarrierKind,
    x: float,
    y: float,
    course: float,
    speed: float,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> np.ndarray:
    """Gradient w.r.t. ``(x, y, course, speed)``; distances clamped at ``EPS_DISTANCE``."""
    dx, dy = x - obs.ox, y - obs.oy
    dist = max(np.hypot(dx, dy), EPS_DISTANCE)
    grad_h = np.array([dx / dist, dy / dist, 0.0, 0.0])
    if kind == BarrierKind.DC:
        return grad_h

    s, c = np.sin(course), np.cos(course)
    if kind == BarrierKind.ED:
        wx, wy = speed * c - obs.vx, speed * s - obs.vy
        h_dot = (dx * wx + dy * wy) / dist
        grad_h_dot = np.array(
            [
                wx / dist - h_dot * dx / dist**2,
                wy / dist - h_dot * dy / dist**2,
                speed * (-dx * s + dy * c) / dist,
                (dx * c + dy * s) / dist,
            ]
        )
        return grad_h_dot + cfg.alpha * grad_h

    if speed < 0:
        grad = _gradient(kind, x, y, course + np.pi, -speed, obs, cfg)
        grad[3] = -grad[3]
        return grad

    R = turning_radius(speed, cfg.r_max)
    grads, values = [], []
    for side in (1.0, -1.0):  # right, left
        ex = x + side * R * s - obs.ox
        ey = y - side * R * c - obs.oy
        dist = max(np.hypot(ex, ey), EPS_DISTANCE)
        values.append(dist - (obs.o_r + cfg.R_s + R))
        grads.append(
            np.array(
                [
                    ex / dist,
                    ey / dist,
                    side * R * (ex * c + ey * s) / dist,
                    side * (ex * s - ey * c) / (dist * cfg.r_max) - 1.0 / cfg.r_max,
                ]
            )
        )

    w_right = expit(cfg.k * (values[0] - values[1]))
    return w_right * grads[0] + (1.0 - w_right) * grads[1]


def barrier_value_and_gradient(
    kind: Union[str, BarrierKind],
    pose: PlanarKinematicPose,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> Tuple[float, np.ndarray]:
    """Return :func:`barrier_value` and :func:`barrier_gradient` without the singularity check."""
    kind = BarrierKind(kind)
    value = _value(kind, pose.x, pose.y, pose.course, pose.speed, obs, cfg)

    return float(value), _gradient(kind, pose.x, pose.y, pose.course, pose.speed, obs, cfg)


@d.dedent
def barrier_gradient(
    kind: Union[str, BarrierKind],
    pose: PlanarKinematicPose,
    obs: Obstacle,
    cfg: BarrierConfig,
) -> np.ndarray:
    """
    Analytic gradient of a barrier w.r.t. ``(x, y, course, speed)``.

    Parameters
    ----------
    kind
        Barrier to differentiate.
    %(pose)s
    %(obstacle)s
    %(cfg)s

    Returns
    -------
    :class:`numpy.ndarray`
        Gradient of shape ``(4,)``.

    Raises
    ------
    ValueError
        If ``kind`` is :attr:`BarrierKind.ED` and the vehicle sits on the obstacle center.
    """
    kind = BarrierKind(kind)
    if kind == BarrierKind.ED:
        _check_line_of_sight(pose, obs)

    return _gradient(kind, pose.x, pose.y, pose.course, pose.speed, obs, cfg)
