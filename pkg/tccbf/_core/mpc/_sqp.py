from typing import List, Tuple, Optional
from time import perf_counter
import logging

import attr

import numpy as np

from tccbf.constants import SolverStatus
from tccbf._core.mpc._qp import QuadraticProgram, qp_subproblem_solve
from tccbf._core.utils._errors import QpInfeasibleError, NumericalFailureError
from tccbf._core.mpc._problem import Nlp, Linearization
from tccbf._core.models._integrate import Model_t, rollout, rk4_step
from tccbf.constants._pkg_constants import SLACK_TOL, EPS_DISTANCE, SYMMETRY_TOL

__all__ = [
    "WarmStart",
    "SolverResult",
    "sqp_solve",
    "shift_warm_start",
    "cold_start",
    "break_symmetry",
]

_ARMIJO = 1e-4
_MAX_REGULARIZATION = 1e2
# round-off allowance on the merit decrease
_MERIT_TOL = 1e-12


def _as_matrix(value) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=float)).copy()


@attr.s(frozen=True, eq=False)
class WarmStart:
    """Initial guess of states ``(N + 1, nx)`` and inputs ``(N, nu)``."""

    states: np.ndarray = attr.ib(converter=_as_matrix)
    inputs: np.ndarray = attr.ib(converter=_as_matrix)

    def __attrs_post_init__(self):
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise ValueError(
                f"Expected one more state than inputs, found `{self.states.shape[0]}` "
                f"and `{self.inputs.shape[0]}`."
            )


@attr.s(frozen=True, eq=False)
class SolverResult:
    """
    Outcome of :func:`sqp_solve`.

    The states are a forward simulation of the returned inputs, so they satisfy the shooting
    constraints exactly. ``slacks``, ``max_slack`` and ``cost`` are measured on them.
    ``merit_history`` pairs the L1 merit of consecutive accepted iterates, all evaluated with
    the final penalty.
    """

    inputs: np.ndarray = attr.ib()
    states: np.ndarray = attr.ib()
    slacks: np.ndarray = attr.ib()
    status: SolverStatus = attr.ib(converter=SolverStatus)
    kkt_residual: float = attr.ib(converter=float)
    sqp_iterations: int = attr.ib(converter=int)
    max_slack: float = attr.ib(converter=float)
    cost: float = attr.ib(converter=float)
    multipliers: np.ndarray = attr.ib()
    merit_history: Tuple[Tuple[float, float], ...] = attr.ib(converter=tuple)
    solve_time: float = attr.ib(default=0.0, converter=float)

    @property
    def first_input(self) -> np.ndarray:
        """Input applied in receding-horizon fashion."""
        return self.inputs[0].copy()

    @property
    def N(self) -> int:  # noqa: D102
        return self.inputs.shape[0]


def cold_start(nlp: Nlp) -> WarmStart:
    """Zero inputs and the states they produce from the measured state."""
    inputs = np.zeros((nlp.N, nlp.nu))
    return WarmStart(rollout(nlp.model, nlp.problem.x_init, inputs, nlp.config.T_s), inputs)


def shift_warm_start(previous: SolverResult, model: Model_t, T_s: float) -> WarmStart:
    """
    Shift a solution by one step for the next control instant.

    Parameters
    ----------
    previous
        Solution of the previous step.
    model
        Vehicle model used to extend the state sequence.
    T_s
        Sampling time [s].

    Returns
    -------
    :class:`WarmStart`
        States and inputs without their first entries; the last input is repeated and the last
        state integrated once more under it.
    """
    states, inputs = previous.states, previous.inputs
    last = rk4_step(model.deriv, states[-1], inputs[-1], T_s)

    return WarmStart(
        states=np.vstack([states[1:], last]),
        inputs=np.vstack([inputs[1:], inputs[-1:]]),
    )


def _dead_ahead(nlp: Nlp) -> bool:
    x, y, course, _ = nlp.model.kinematics(nlp.problem.x_init)
    c, s = np.cos(course), np.sin(course)
    for track in nlp.problem.obstacles:
        dx, dy = track[0].ox - x, track[0].oy - y
        if dx * c + dy * s > EPS_DISTANCE and abs(c * dy - s * dx) < SYMMETRY_TOL:
            return True
    return False


def break_symmetry(nlp: Nlp, warm_start: WarmStart) -> WarmStart:
    """
    Bias the initial guess towards a starboard turn if an obstacle lies dead ahead.

    On the line of travel through an obstacle center the barrier gradients have no lateral
    component, and Gauss-Newton iterates stay on that line. A small turn in the guess picks
    the side deterministically.

    Parameters
    ----------
    nlp
        The transcribed problem.
    warm_start
        Initial guess.

    Returns
    -------
    :class:`WarmStart`
        ``warm_start`` itself if no obstacle lies within ``SYMMETRY_TOL`` of the line of travel
        or :attr:`SolverSettings.symmetry_bias` is `0`, otherwise the biased inputs and their
        rollout from the measured state.
    """
    bias = nlp.config.solver.symmetry_bias
    if bias == 0 or not nlp.n_obstacles or not _dead_ahead(nlp):
        return warm_start

    lower, upper = np.asarray(nlp.config.u_lower), np.asarray(nlp.config.u_upper)
    turn = -bias * (upper - lower) / 2 * np.asarray(nlp.model.yaw_input)
    inputs = np.clip(warm_start.inputs + turn, lower, upper)
    logging.debug("Obstacle dead ahead, biasing the initial guess to starboard")

    return WarmStart(rollout(nlp.model, nlp.problem.x_init, inputs, nlp.config.T_s), inputs)


def _initial_point(nlp: Nlp, warm_start: Optional[WarmStart]) -> np.ndarray:
    if warm_start is None:
        warm_start = cold_start(nlp)
    if warm_start.states.shape != (nlp.N + 1, nlp.nx) or warm_start.inputs.shape != (
        nlp.N,
        nlp.nu,
    ):
        raise ValueError(
            f"Expected a warm start with `{nlp.N + 1}` states of size `{nlp.nx}` and `{nlp.N}` "
            f"inputs of size `{nlp.nu}`, found shapes `{warm_start.states.shape}` "
            f"and `{warm_start.inputs.shape}`."
        )

    warm_start = break_symmetry(nlp, warm_start)
    states = warm_start.states.copy()
    states[0] = nlp.problem.x_init
    inputs = np.clip(warm_start.inputs, nlp.config.u_lower, nlp.config.u_upper)
    slacks = np.maximum(-nlp.barrier_rows(states), 0.0) if nlp.n_slacks else None

    return nlp.pack(states, inputs, slacks)


def _solve_qp(nlp: Nlp, lin: Linearization) -> Tuple[np.ndarray, np.ndarray]:
    T, t0 = nlp.condense(lin)
    n_u = nlp.n_inputs
    H = T.T @ nlp.hessian @ T
    g = T.T @ (lin.gradient + nlp.hessian @ t0)
    G = lin.A_in @ T
    b = -(lin.c_in + lin.A_in @ t0)

    # feasible start: keep the inputs, raise each slack just enough
    w0 = np.zeros(T.shape[1])
    working = list(np.flatnonzero(np.abs(b[: 2 * n_u]) <= 1e-12))
    if nlp.n_slacks:
        n_s = nlp.n_slacks
        sign_rows = 2 * n_u + np.arange(n_s)
        cbf_rows = sign_rows + n_s
        w0[n_u:] = np.maximum(b[sign_rows], b[cbf_rows])
        working += [c if b[c] >= b[s] else s for s, c in zip(sign_rows, cbf_rows)]

    reg = nlp.config.solver.regularization
    while True:
        try:
            sol = qp_subproblem_solve(
                QuadraticProgram(
                    H=H + reg * np.eye(H.shape[0]),
                    g=g,
                    G=G,
                    b=b,
                    x0=w0,
                    working_set=working,
                ),
                max_iter=nlp.config.solver.max_qp_iters,
            )
            if sol.converged and np.all(np.isfinite(sol.x)):
                break
        except np.linalg.LinAlgError:
            pass
        reg *= 10.0
        if reg > _MAX_REGULARIZATION:
            raise QpInfeasibleError("QP subproblem failed for every regularization level.")
        logging.debug(f"Retrying QP subproblem with regularization `{reg:.1e}`")

    return T @ sol.x + t0, sol.multipliers


def sqp_solve(nlp: Nlp, warm_start: Optional[WarmStart] = None) -> SolverResult:
    """
    Solve the NLP by Gauss-Newton sequential quadratic programming.

    Each iteration condenses the linearized problem onto the input and slack steps, solves
    the QP with :func:`tccbf.mpc.qp_subproblem_solve` and backtracks on the L1 merit function.

    Parameters
    ----------
    nlp
        The transcribed problem.
    warm_start
        Initial guess; a cold start from zero inputs if `None`.

    Returns
    -------
    :class:`SolverResult`
        The best iterate found.

    Raises
    ------
    NumericalFailureError
        If a `NaN` or `Inf` is encountered.
    """
    start = perf_counter()
    settings = nlp.config.solver
    z = _initial_point(nlp, warm_start)
    lin = nlp.linearize(z)
    multipliers = np.zeros(nlp.n_in)
    mu = 1.0
    iterates: List[np.ndarray] = [z]
    status = SolverStatus.MAX_ITERS
    kkt = np.inf
    iterations = 0

    for iterations in range(1, settings.max_sqp_iters + 1):
        step, multipliers = _solve_qp(nlp, lin)
        if not np.all(np.isfinite(step)):
            raise NumericalFailureError("qp step", iterate=nlp.dump(z))

        nu = nlp.equality_multipliers(lin, step, multipliers)
        mu = max(mu, 1.1 * max(np.abs(nu).max(initial=0.0), multipliers.max(initial=0.0)))

        violation = np.abs(lin.c_eq).sum() + np.maximum(-lin.c_in, 0.0).sum()
        phi0 = lin.cost + mu * violation
        slope = min(lin.gradient @ step - mu * violation, 0.0)

        alpha, accepted = 1.0, None
        for _ in range(settings.max_line_search):
            trial = z + alpha * step
            phi = nlp.merit(trial, mu)
            if phi <= phi0 + _ARMIJO * alpha * slope + _MERIT_TOL * (1.0 + abs(phi0)):
                accepted = (trial, phi)
                break
            alpha *= settings.line_search_shrink

        if accepted is None:
            logging.debug(f"Line search failed at SQP iteration `{iterations}`")
            kkt = nlp.kkt_residual(z, multipliers, lin)
            break

        z, _ = accepted
        iterates.append(z)
        lin = nlp.linearize(z)
        kkt = nlp.kkt_residual(z, multipliers, lin)
        if kkt <= settings.kkt_tol:
            status = SolverStatus.CONVERGED
            break

    _, U, _ = nlp.unpack(z)
    states = rollout(nlp.model, nlp.problem.x_init, U, nlp.config.T_s)
    if not np.all(np.isfinite(states)):
        raise NumericalFailureError("rollout", iterate=nlp.dump(z))
    slacks = np.maximum(-nlp.barrier_rows(states), 0.0) if nlp.n_slacks else np.zeros(0)
    max_slack = float(slacks.max(initial=0.0))
    if max_slack > SLACK_TOL:
        status = SolverStatus.DEGRADED_FEASIBILITY
    merits = [nlp.merit(it, mu) for it in iterates]

    result = SolverResult(
        inputs=U.copy(),
        states=states,
        slacks=slacks,
        status=status,
        kkt_residual=kkt,
        sqp_iterations=iterations,
        max_slack=max_slack,
        cost=nlp.cost(nlp.pack(states, U, slacks)),
        multipliers=multipliers,
        merit_history=zip(merits[:-1], merits[1:]),
        solve_time=perf_counter() - start,
    )
    logging.debug(
        f"SQP finished with status `{result.status.value}` after `{iterations}` iterations, "
        f"KKT residual `{kkt:.2e}`, max slack `{max_slack:.2e}`"
    )

    return result
