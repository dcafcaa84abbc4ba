from typing import Tuple, Union, Callable, Sequence

import numpy as np

from tccbf._core.utils._docs import d
from tccbf._core.models._asv import AsvModel
from tccbf._core.models._unicycle import UnicycleModel

Model_t = Union[UnicycleModel, AsvModel]
Deriv_t = Callable[[np.ndarray, np.ndarray], np.ndarray]


@d.dedent
def rk4_step(
    deriv_fn: Deriv_t, state: Sequence[float], inp: Sequence[float], T_s: float
) -> np.ndarray:
    """
    Advance the state by one classical Runge-Kutta step.

    The input is held constant over the interval.

    Parameters
    ----------
    %(deriv_fn)s
    state
        State vector.
    inp
        Input vector.
    T_s
        Step length [s].

    Returns
    -------
    :class:`numpy.ndarray`
        The state after ``T_s`` seconds.
    """
    if not T_s > 0:
        raise ValueError(f"Expected `T_s` to be positive, found `{T_s}`.")

    x = np.asarray(state, dtype=float)
    u = np.asarray(inp, dtype=float)

    k1 = deriv_fn(x, u)
    k2 = deriv_fn(x + 0.5 * T_s * k1, u)
    k3 = deriv_fn(x + 0.5 * T_s * k2, u)
    k4 = deriv_fn(x + T_s * k3, u)

    return x + T_s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def dynamics_jacobians(
    model: Model_t, state: Sequence[float], inp: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Return analytic Jacobians of the continuous-time dynamics.

    Parameters
    ----------
    model
        Vehicle model.
    state
        State vector.
    inp
        Input vector.

    Returns
    -------
    :class:`tuple`
        ``(A, B)``, the derivatives w.r.t. the state and the input.
    """
    return model.jacobians(np.asarray(state, dtype=float), np.asarray(inp, dtype=float))


def rk4_step_jacobians(
    model: Model_t, state: Sequence[float], inp: Sequence[float], T_s: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Return one Runge-Kutta step together with its exact sensitivities.

    Parameters
    ----------
    model
        Vehicle model.
    state
        State vector.
    inp
        Input vector.
    T_s
        Step length [s].

    Returns
    -------
    :class:`tuple`
        ``(x_next, dx_next/dx, dx_next/du)``.
    """
    x = np.asarray(state, dtype=float)
    u = np.asarray(inp, dtype=float)
    eye = np.eye(model.nx)
    h = T_s

    k1 = model.deriv(x, u)
    A1, B1 = model.jacobians(x, u)
    s2 = x + 0.5 * h * k1
    k2 = model.deriv(s2, u)
    A2, B2 = model.jacobians(s2, u)
    s3 = x + 0.5 * h * k2
    k3 = model.deriv(s3, u)
    A3, B3 = model.jacobians(s3, u)
    s4 = x + h * k3
    k4 = model.deriv(s4, u)
    A4, B4 = model.jacobians(s4, u)

    dk1x, dk1u = A1, B1
    dk2x, dk2u = A2 @ (eye + 0.5 * h * dk1x), A2 @ (0.5 * h * dk1u) + B2
    dk3x, dk3u = A3 @ (eye + 0.5 * h * dk2x), A3 @ (0.5 * h * dk2u) + B3
    dk4x, dk4u = A4 @ (eye + h * dk3x), A4 @ (h * dk3u) + B4

    x_next = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    Ad = eye + h / 6.0 * (dk1x + 2 * dk2x + 2 * dk3x + dk4x)
    Bd = h / 6.0 * (dk1u + 2 * dk2u + 2 * dk3u + dk4u)

    return x_next, Ad, Bd


def finite_difference_jacobians(
    fn: Deriv_t, state: Sequence[float], inp: Sequence[float], step: float = 1e-5
) -> Tuple[np.ndarray, np.ndarray]:
    """Central finite-difference Jacobians of ``fn`` w.r.t. the state and the input."""
    x = np.asarray(state, dtype=float)
    u = np.asarray(inp, dtype=float)

    def column(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, i: int) -> np.ndarray:
        e = np.zeros_like(z)
        e[i] = step
        return (f(z + e) - f(z - e)) / (2 * step)

    A = np.column_stack([column(lambda z: fn(z, u), x, i) for i in range(x.size)])
    B = np.column_stack([column(lambda z: fn(x, z), u, i) for i in range(u.size)])

    return A, B


def rollout(
    model: Model_t, state: Sequence[float], inputs: np.ndarray, T_s: float
) -> np.ndarray:
    """Integrate ``inputs``, one row per step, from ``state`` into ``len(inputs) + 1`` states."""
    states = [np.asarray(state, dtype=float)]
    for u in np.asarray(inputs, dtype=float).reshape(-1, model.nu):
        states.append(rk4_step(model.deriv, states[-1], u, T_s))

    return np.vstack(states)
