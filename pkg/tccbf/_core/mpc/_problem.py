from typing import Any, Dict, List, Tuple, Union, Sequence, NamedTuple
import logging

import attr

from scipy.linalg import solve_triangular

import numpy as np

from tccbf._misc.utils import is_finite, wrap_to_pi
from tccbf.constants import BarrierKind, VehicleKind
from tccbf._core.utils._errors import ConfigError, NumericalFailureError
from tccbf._core.mpc._config import MpcConfig
from tccbf._core.models._integrate import Model_t, rk4_step, rk4_step_jacobians
from tccbf._core.barrier._geometry import Obstacle, BarrierConfig
from tccbf._core.barrier._functions import _value, _gradient
from tccbf.constants._pkg_constants import EPS_DISTANCE

__all__ = [
    "OcpProblem",
    "Nlp",
    "Linearization",
    "build_reference",
    "transcribe",
    "evaluate_cost",
    "kkt_residual",
]

_HEADING = 2


def build_reference(
    vehicle: Union[str, VehicleKind], u_r: float, N: int, path: str = "straight"
) -> np.ndarray:
    """
    Return the reference trajectory ``r_0 .. r_N`` for tracking the x-axis.

    Parameters
    ----------
    vehicle
        Vehicle kind; selects the state layout.
    u_r
        Reference surge speed [m/s].
    N
        Horizon length.
    path
        Only ``'straight'`` (the x-axis) is supported.

    Returns
    -------
    :class:`numpy.ndarray`
        Array of shape ``(N + 1, nx)``. Zero-weighted components (``x``, and ``v`` of a vessel)
        are set to `0`.

    Raises
    ------
    ConfigError
        If ``path`` is not ``'straight'``.
    """
    if path != "straight":
        raise ConfigError(
            f"Only straight paths along the x-axis are supported, found `{path!r}`."
        )
    vehicle = VehicleKind(vehicle)
    if N < 1:
        raise ValueError(f"Expected `N` to be positive, found `{N}`.")

    ref = np.zeros((N + 1, vehicle.nx))
    ref[:, 3] = u_r

    return ref


@attr.s(frozen=True, eq=False)
class OcpProblem:
    """
    Data of one finite-horizon optimal control problem.

    Parameters
    ----------
    model
        Vehicle model.
    x_init
        Measured state.
    u_prev
        Previously applied input, used by the input-rate term of the first stage.
    reference
        Reference states ``r_0 .. r_N``.
    obstacles
        One track per obstacle, each holding its position at steps ``0 .. N``.
    barrier
        Barrier kind and parameters.
    """

    model: Model_t = attr.ib()
    x_init: np.ndarray = attr.ib(converter=lambda v: np.asarray(v, dtype=float).copy())
    u_prev: np.ndarray = attr.ib(converter=lambda v: np.asarray(v, dtype=float).copy())
    reference: np.ndarray = attr.ib(converter=lambda v: np.atleast_2d(np.asarray(v, dtype=float)))
    obstacles: Tuple[Tuple[Obstacle, ...], ...] = attr.ib(
        converter=lambda v: tuple(tuple(track) for track in v)
    )
    barrier: BarrierConfig = attr.ib(validator=attr.validators.instance_of(BarrierConfig))

    def __attrs_post_init__(self):
        nx, nu = self.model.nx, self.model.nu
        if self.x_init.shape != (nx,):
            raise ValueError(f"Expected `x_init` of shape `{(nx,)}`, found `{self.x_init.shape}`.")
        if self.u_prev.shape != (nu,):
            raise ValueError(f"Expected `u_prev` of shape `{(nu,)}`, found `{self.u_prev.shape}`.")
        if self.reference.shape[1] != nx:
            raise ValueError(
                f"Expected `reference` with `{nx}` columns, found `{self.reference.shape[1]}`."
            )
        for track in self.obstacles:
            if len(track) != self.reference.shape[0]:
                raise ValueError(
                    f"Expected every obstacle track to have `{self.reference.shape[0]}` entries, "
                    f"found `{len(track)}`."
                )

    @property
    def N(self) -> int:
        """Horizon length."""
        return self.reference.shape[0] - 1

    @classmethod
    def from_obstacles(
        cls,
        model: Model_t,
        x_init: Sequence[float],
        u_prev: Sequence[float],
        reference: np.ndarray,
        obstacles: Sequence[Obstacle],
        barrier: BarrierConfig,
        T_s: float,
    ) -> "OcpProblem":
        """Create a problem, extrapolating each obstacle over the horizon of ``reference``."""
        steps = np.atleast_2d(reference).shape[0]
        tracks = [tuple(o.at(i * T_s) for i in range(steps)) for o in obstacles]

        return cls(model, x_init, u_prev, reference, tracks, barrier)


class Linearization(NamedTuple):
    """Values and first derivatives of the NLP at one point."""

    cost: float
    gradient: np.ndarray
    c_eq: np.ndarray
    A: List[np.ndarray]
    B: List[np.ndarray]
    c_in: np.ndarray
    A_in: np.ndarray


class Nlp:
    """
    Multiple-shooting transcription of an :class:`OcpProblem`.

    The decision vector stacks the states ``x_0 .. x_N``, the inputs ``u_0 .. u_{N-1}`` and one
    slack per barrier row. Equalities are ``x_0 = x_init`` and ``x_{i+1} = F(x_i, u_i)``, where
    ``F`` is one Runge-Kutta step. Inequalities, all of the form ``c(z) >= 0``, are ordered as
    lower input bounds, upper input bounds, slack signs and barrier rows.

    Parameters
    ----------
    problem
        Problem data.
    config
        Horizon, weights and bounds.
    """

    def __init__(self, problem: OcpProblem, config: MpcConfig):
        model = problem.model
        config.check_dims(model.nx, model.nu)
        if problem.N != config.N:
            raise ValueError(
                f"Expected a reference of `{config.N + 1}` states, found `{problem.N + 1}`."
            )

        self.problem = problem
        self.config = config
        self.model = model
        self.kind = BarrierKind(problem.barrier.kind)
        self.N, self.nx, self.nu = config.N, model.nx, model.nu
        self.n_obstacles = len(problem.obstacles)
        self.rows_per_obstacle = self.N + 1 if self.kind == BarrierKind.DC else self.N

        self.n_states = (self.N + 1) * self.nx
        self.n_inputs = self.N * self.nu
        self.n_slacks = self.n_obstacles * self.rows_per_obstacle
        self.n = self.n_states + self.n_inputs + self.n_slacks
        self.n_eq = self.n_states
        self.n_in = 2 * self.n_inputs + 2 * self.n_slacks

        self._u_lower = np.tile(config.u_lower, self.N)
        self._u_upper = np.tile(config.u_upper, self.N)
        self._state_weights = np.sqrt(
            np.vstack([np.tile(config.Q, (self.N, 1)), np.asarray(config.P)[None, :]])
        )
        self._J = self._residual_jacobian()
        self.hessian = 2.0 * self._J.T @ self._J
        self._slack_gradient = np.zeros(self.n)
        self._slack_gradient[self.n_states + self.n_inputs :] = config.solver.slack_penalty
        self._warned_singular = False

    # layout

    @property
    def slack_slice(self) -> slice:  # noqa: D102
        return slice(self.n_states + self.n_inputs, self.n)

    def pack(
        self, states: np.ndarray, inputs: np.ndarray, slacks: Union[np.ndarray, None] = None
    ) -> np.ndarray:
        """Stack states, inputs and slacks into a decision vector."""
        slacks = np.zeros(self.n_slacks) if slacks is None else np.ravel(slacks)
        return np.concatenate([np.ravel(states), np.ravel(inputs), slacks]).astype(float)

    def unpack(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a decision vector into states ``(N + 1, nx)``, inputs ``(N, nu)`` and slacks."""
        X = z[: self.n_states].reshape(self.N + 1, self.nx)
        U = z[self.n_states : self.n_states + self.n_inputs].reshape(self.N, self.nu)
        return X, U, z[self.slack_slice]

    def dump(self, z: np.ndarray) -> Dict[str, Any]:
        """Return the iterate as plain lists, for error reports."""
        X, U, S = self.unpack(z)
        return {
            "states": X.tolist(),
            "inputs": U.tolist(),
            "slacks": S.tolist(),
            "x_init": self.problem.x_init.tolist(),
        }

    # cost

    def _residual_jacobian(self) -> np.ndarray:
        N, nx, nu = self.N, self.nx, self.nu
        cfg = self.config
        J = np.zeros((self.n_states + 2 * self.n_inputs, self.n))
        J[: self.n_states, : self.n_states] = np.diag(self._state_weights.ravel())

        rows = self.n_states + np.arange(self.n_inputs)
        cols = self.n_states + np.arange(self.n_inputs)
        J[rows, cols] = np.tile(np.sqrt(cfg.R), N)

        rate = np.tile(np.sqrt(cfg.Rd), N) / cfg.T_s
        rows = rows + self.n_inputs
        J[rows, cols] = rate
        J[rows[nu:], cols[:-nu]] = -rate[nu:]

        return J

    def residuals(self, z: np.ndarray) -> np.ndarray:
        """Weighted least-squares residuals; the cost is their squared norm plus slack penalty."""
        X, U, _ = self.unpack(z)
        cfg = self.config
        err = X - self.problem.reference
        err[:, _HEADING] = wrap_to_pi(err[:, _HEADING])
        rate = np.diff(np.vstack([self.problem.u_prev, U]), axis=0) / cfg.T_s

        return np.concatenate(
            [
                (self._state_weights * err).ravel(),
                (np.sqrt(cfg.R) * U).ravel(),
                (np.sqrt(cfg.Rd) * rate).ravel(),
            ]
        )

    def cost(self, z: np.ndarray) -> float:  # noqa: D102
        res = self.residuals(z)
        return float(res @ res + self._slack_gradient @ z)

    def cost_gradient(self, z: np.ndarray) -> np.ndarray:  # noqa: D102
        return 2.0 * self._J.T @ self.residuals(z) + self._slack_gradient

    # constraints

    def _barrier_rows(self, X: np.ndarray, jacobian: bool) -> Tuple[np.ndarray, np.ndarray]:
        """Barrier rows without slacks, and their Jacobian w.r.t. the states."""
        cfg = self.problem.barrier
        N, nx = self.N, self.nx
        values = np.zeros(self.n_slacks)
        jac = np.zeros((self.n_slacks, self.n_states)) if jacobian else np.zeros((0, 0))

        poses = [self.model.kinematics(x) for x in X]
        kin_jacs = [self.model.kinematics_jacobian(x) for x in X] if jacobian else None

        for j, track in enumerate(self.problem.obstacles):
            h = np.empty(N + 1)
            grads = []
            for i, (pose, obs) in enumerate(zip(poses, track)):
                if (
                    self.kind == BarrierKind.ED
                    and not self._warned_singular
                    and np.hypot(pose[0] - obs.ox, pose[1] - obs.oy) < EPS_DISTANCE
                ):
                    self._warned_singular = True
                    logging.warning(
                        "Predicted position coincides with an obstacle center, "
                        "line-of-sight direction clamped"
                    )
                h[i] = _value(self.kind, *pose, obs, cfg)
                if jacobian:
                    grads.append(_gradient(self.kind, *pose, obs, cfg) @ kin_jacs[i])

            offset = j * self.rows_per_obstacle
            if self.kind == BarrierKind.DC:
                values[offset : offset + N + 1] = h
                if jacobian:
                    for i in range(N + 1):
                        jac[offset + i, i * nx : (i + 1) * nx] = grads[i]
                continue

            keep = 1.0 - cfg.decay
            values[offset : offset + N] = h[1:] - keep * h[:-1]
            if jacobian:
                for i in range(N):
                    jac[offset + i, i * nx : (i + 1) * nx] = -keep * grads[i]
                    jac[offset + i, (i + 1) * nx : (i + 2) * nx] = grads[i + 1]

        return values, jac

    def barrier_rows(self, states: np.ndarray) -> np.ndarray:
        """Barrier constraint values without slacks, one per obstacle and stage."""
        return self._barrier_rows(np.asarray(states, dtype=float), jacobian=False)[0]

    def equalities(self, z: np.ndarray) -> np.ndarray:
        """Initial-state and shooting-gap residuals."""
        X, U, _ = self.unpack(z)
        gaps = [X[0] - self.problem.x_init]
        for i in range(self.N):
            gaps.append(X[i + 1] - rk4_step(self.model.deriv, X[i], U[i], self.config.T_s))
        return np.concatenate(gaps)

    def inequalities(self, z: np.ndarray) -> np.ndarray:
        """Input bounds, slack signs and barrier rows, all ``>= 0`` when feasible."""
        X, U, S = self.unpack(z)
        u = U.ravel()
        cbf = self.barrier_rows(X) + S if self.n_slacks else np.zeros(0)
        return np.concatenate([u - self._u_lower, self._u_upper - u, S, cbf])

    def violation(self, z: np.ndarray) -> float:
        """L1 norm of the constraint violation."""
        return float(
            np.abs(self.equalities(z)).sum() + np.maximum(-self.inequalities(z), 0.0).sum()
        )

    def merit(self, z: np.ndarray, mu: float) -> float:
        """L1 exact penalty ``f + mu (||c_eq||_1 + sum max(0, -c_in))``."""
        value = self.cost(z) + mu * self.violation(z)
        if not np.isfinite(value):
            raise NumericalFailureError("merit", iterate=self.dump(z))
        return value

    def linearize(self, z: np.ndarray) -> Linearization:
        """
        Evaluate the cost, the constraints and their Jacobians.

        Raises
        ------
        NumericalFailureError
            If any value is `NaN` or `Inf`.
        """
        X, U, S = self.unpack(z)
        T_s = self.config.T_s

        gaps, As, Bs = [X[0] - self.problem.x_init], [], []
        for i in range(self.N):
            x_next, Ad, Bd = rk4_step_jacobians(self.model, X[i], U[i], T_s)
            gaps.append(X[i + 1] - x_next)
            As.append(Ad)
            Bs.append(Bd)
        c_eq = np.concatenate(gaps)

        n_u, n_s = self.n_inputs, self.n_slacks
        u0, s0 = self.n_states, self.n_states + n_u
        A_in = np.zeros((self.n_in, self.n))
        A_in[np.arange(n_u), u0 + np.arange(n_u)] = 1.0
        A_in[n_u + np.arange(n_u), u0 + np.arange(n_u)] = -1.0
        A_in[2 * n_u + np.arange(n_s), s0 + np.arange(n_s)] = 1.0
        cbf = np.zeros(0)
        if n_s:
            values, jac = self._barrier_rows(X, jacobian=True)
            cbf = values + S
            A_in[2 * n_u + n_s :, : self.n_states] = jac
            A_in[2 * n_u + n_s + np.arange(n_s), s0 + np.arange(n_s)] = 1.0
        u = U.ravel()
        c_in = np.concatenate([u - self._u_lower, self._u_upper - u, S, cbf])

        lin = Linearization(
            cost=self.cost(z),
            gradient=self.cost_gradient(z),
            c_eq=c_eq,
            A=As,
            B=Bs,
            c_in=c_in,
            A_in=A_in,
        )
        if not is_finite(lin.cost, lin.gradient, c_eq, c_in, A_in, *As, *Bs):
            raise NumericalFailureError("linearize", iterate=self.dump(z))

        return lin

    # condensing

    def condense(self, lin: Linearization) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eliminate the state steps through the linearized dynamics.

        Returns
        -------
        :class:`tuple`
            ``(T, t0)`` such that every step satisfying the linearized equalities is
            ``p = T w + t0`` with ``w = (du, ds)``.
        """
        N, nx, nu = self.N, self.nx, self.nu
        n_w = self.n_inputs + self.n_slacks
        T = np.zeros((self.n, n_w))
        t0 = np.zeros(self.n)

        T[self.n_states :, :] = np.eye(n_w)
        gaps = lin.c_eq.reshape(N + 1, nx)
        t0[:nx] = -gaps[0]
        for i in range(N):
            rows, nxt = slice(i * nx, (i + 1) * nx), slice((i + 1) * nx, (i + 2) * nx)
            T[nxt, : self.n_inputs] = lin.A[i] @ T[rows, : self.n_inputs]
            T[nxt, i * nu : (i + 1) * nu] += lin.B[i]
            t0[nxt] = lin.A[i] @ t0[rows] - gaps[i + 1]

        return T, t0

    def equality_multipliers(
        self, lin: Linearization, step: np.ndarray, multipliers: np.ndarray
    ) -> np.ndarray:
        """Multipliers of the equalities recovered from stationarity w.r.t. the states."""
        N, nx = self.N, self.nx
        A_x = np.eye(self.n_states)
        for i in range(N):
            A_x[(i + 1) * nx : (i + 2) * nx, i * nx : (i + 1) * nx] = -lin.A[i]
        r = lin.gradient + self.hessian @ step - lin.A_in.T @ multipliers

        return solve_triangular(A_x.T, r[: self.n_states], lower=False, unit_diagonal=True)

    def kkt_residual(
        self, z: np.ndarray, multipliers: np.ndarray, lin: Union[Linearization, None] = None
    ) -> float:
        """
        Max-norm of the reduced stationarity, primal, dual and complementarity violations.

        Stationarity is taken on the null space of the linearized equalities, which removes
        the equality multipliers.
        """
        lin = self.linearize(z) if lin is None else lin
        lam = np.asarray(multipliers, dtype=float)
        T, _ = self.condense(lin)

        return float(
            max(
                np.abs(T.T @ (lin.gradient - lin.A_in.T @ lam)).max(initial=0.0),
                np.abs(lin.c_eq).max(initial=0.0),
                np.maximum(-lin.c_in, 0.0).max(initial=0.0),
                np.maximum(-lam, 0.0).max(initial=0.0),
                np.abs(lam * lin.c_in).max(initial=0.0),
            )
        )


def transcribe(problem: OcpProblem, config: MpcConfig) -> Nlp:
    """
    Transcribe an optimal control problem by direct multiple shooting.

    Parameters
    ----------
    problem
        Problem data.
    config
        Horizon, weights and bounds.

    Returns
    -------
    :class:`Nlp`
        The nonlinear program.
    """
    nlp = Nlp(problem, config)
    logging.debug(
        f"Transcribed `{nlp.kind.label}` problem with `{nlp.n}` variables, "
        f"`{nlp.n_eq}` equalities and `{nlp.n_in}` inequalities"
    )
    return nlp


def evaluate_cost(nlp: Nlp, point: np.ndarray) -> float:
    """Return the cost of ``point``, the stage and terminal terms plus the slack penalty."""
    return nlp.cost(np.asarray(point, dtype=float))


def kkt_residual(nlp: Nlp, point: np.ndarray, multipliers: np.ndarray) -> float:
    """Return the KKT residual of ``point`` for the inequality ``multipliers``."""
    return nlp.kkt_residual(np.asarray(point, dtype=float), multipliers)
