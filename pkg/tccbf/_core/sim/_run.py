from copy import copy
from typing import Any, Dict, List, Tuple, Union, Mapping, Optional, Sequence
from itertools import product
from concurrent.futures import ThreadPoolExecutor
import logging

from tqdm.auto import tqdm
import attr

import numpy as np

from tccbf.constants import RunStatus, BarrierKind, SolverStatus, VehicleKind
from tccbf._core.mpc._sqp import sqp_solve, shift_warm_start
from tccbf._core.sim._log import TrajectoryLog, barrier_snapshot
from tccbf._core.cache._cache import cache_key
from tccbf._core.utils._errors import ConfigError, QpInfeasibleError, NumericalFailureError
from tccbf._core.mpc._problem import OcpProblem, transcribe, build_reference
from tccbf._core.utils._options import Options
from tccbf._core.sim._scenario import Scenario, propagate_obstacles
from tccbf._core.models._integrate import rk4_step
from tccbf.constants._pkg_constants import INPUT_COLUMNS, STATE_COLUMNS, Column

__all__ = [
    "Simulator",
    "SweepPoint",
    "run_scenario",
    "sweep_preset",
    "run_parameter_sweep",
]


class Simulator:
    """
    Runs scenarios in closed loop and memoizes the logs.

    Parameters
    ----------
    opts
        Options. If `None`, :attr:`tccbf.options` are used.
    """

    def __init__(self, opts: Optional[Options] = None):
        if opts is None:
            from tccbf import options as opts

        if not isinstance(opts, Options):
            raise TypeError(
                f"Expected `opts` to be of type `Options`, found {type(opts).__name__}."
            )

        self._options = copy(opts)  # this does not copy MemoryCache

    def run(self, scenario: Scenario, cache: bool = True) -> TrajectoryLog:
        """
        Simulate ``scenario``, using the cache when possible.

        Parameters
        ----------
        scenario
            Scenario to simulate.
        cache
            Whether to look up and store the log in :attr:`tccbf.options.cache`.

        Returns
        -------
        :class:`tccbf.sim.TrajectoryLog`
            The log.
        """
        from tccbf import __version__

        key = cache_key({"scenario": scenario.to_dict(), "version": __version__})
        if cache:
            try:
                log = self._options.cache[key]
                logging.debug(f"Found run in cache `{self._options.cache}[{key!r}]`")
                return log
            except KeyError:
                pass

        log = self._simulate(scenario)
        if cache and log.status != RunStatus.FAILED:
            logging.debug(f"Caching run to `{self._options.cache}[{key!r}]`")
            self._options.cache[key] = log

        return log

    def _simulate(self, scenario: Scenario) -> TrajectoryLog:
        model = scenario.model()
        config = scenario.mpc
        T_s = config.T_s
        states = STATE_COLUMNS[scenario.vehicle.value]
        inputs = INPUT_COLUMNS[scenario.vehicle.value]

        x = np.asarray(scenario.x_init, dtype=float)
        u_prev = np.asarray(scenario.u_prev, dtype=float)
        reference = build_reference(scenario.vehicle, scenario.u_r, config.N)
        n_steps = int(round(scenario.max_time / T_s))
        rows: List[Dict[str, Any]] = []
        merit: List[Tuple[Tuple[float, float], ...]] = []
        warm, status, error = None, RunStatus.TIMEOUT, None

        def row(t: float, obstacles, u=None, result=None) -> Dict[str, Any]:
            out = {Column.TIME.value: t, **dict(zip(states, x))}
            out.update(barrier_snapshot(model, x, obstacles, scenario))
            if u is not None:
                out.update(zip(inputs, u))
            if result is not None:
                out[Column.STATUS.value] = result.status.value
                out[Column.SQP_ITERATIONS.value] = result.sqp_iterations
                out[Column.KKT_RESIDUAL.value] = result.kkt_residual
                out[Column.MAX_SLACK.value] = result.max_slack
                out[Column.SOLVE_TIME.value] = result.solve_time
            return out

        logging.info(
            f"Running scenario `{scenario.name}` with `{scenario.barrier.kind.label}` "
            f"for at most `{scenario.max_time}` s"
        )
        for k in range(n_steps + 1):
            t = k * T_s
            obstacles = propagate_obstacles(scenario.obstacles, t)
            if x[0] >= scenario.goal_x:
                rows.append(row(t, obstacles))
                status = RunStatus.ARRIVED
                break
            if k == n_steps:
                rows.append(row(t, obstacles))
                break

            problem = OcpProblem.from_obstacles(
                model, x, u_prev, reference, obstacles, scenario.barrier, T_s
            )
            try:
                result = sqp_solve(transcribe(problem, config), warm)
            except (NumericalFailureError, QpInfeasibleError) as e:
                logging.error(f"Solver failed at `t={t:.2f}` s: {e}")
                rows.append(row(t, obstacles))
                status, error = RunStatus.FAILED, str(e)
                break

            if result.status == SolverStatus.DEGRADED_FEASIBILITY:
                logging.warning(
                    f"Barrier constraints softened at `t={t:.2f}` s, "
                    f"max slack `{result.max_slack:.3g}`"
                )
            logging.debug(
                f"t={t:.2f} SQP iterations `{result.sqp_iterations}`, "
                f"KKT residual `{result.kkt_residual:.2e}`, max slack `{result.max_slack:.2e}`"
            )

            u = result.first_input
            rows.append(row(t, obstacles, u, result))
            merit.append(result.merit_history)
            x = rk4_step(model.deriv, x, u, T_s)
            u_prev = u
            warm = shift_warm_start(result, model, T_s)

        log = TrajectoryLog.from_rows(scenario, rows, status, error=error, merit_histories=merit)
        if status == RunStatus.TIMEOUT:
            logging.warning(
                f"Scenario `{scenario.name}` did not reach `x={scenario.goal_x}` "
                f"within `{scenario.max_time}` s"
            )
        logging.info(f"Finished `{log}`")

        return log

    def __str__(self) -> str:
        return f"<{self.__class__.__name__}[options={self._options}]>"

    def __repr__(self) -> str:
        return str(self)


def run_scenario(
    scenario: Scenario, opts: Optional[Options] = None, cache: bool = True
) -> TrajectoryLog:
    """
    Simulate a scenario in closed loop.

    Every step extrapolates the obstacles over the horizon, solves the optimal control
    problem, applies the first input and integrates the vehicle one step. The run stops when
    the vehicle reaches ``goal_x`` or after ``max_time`` seconds.

    Parameters
    ----------
    scenario
        Scenario to simulate.
    opts
        Options. If `None`, :attr:`tccbf.options` are used.
    cache
        Whether to use the cache.

    Returns
    -------
    :class:`tccbf.sim.TrajectoryLog`
        The log; a solver failure ends the run early with status
        :attr:`tccbf.constants.RunStatus.FAILED` and the error message attached.
    """
    return Simulator(opts).run(scenario, cache=cache)


@attr.s(frozen=True)
class SweepPoint:
    """One grid point of a parameter sweep; ``log`` is `None` if the run raised."""

    parameters: Dict[str, float] = attr.ib(converter=dict)
    log: Optional[TrajectoryLog] = attr.ib(default=None, eq=False)
    error: Optional[str] = attr.ib(default=None)

    @property
    def ok(self) -> bool:
        """Whether the run completed without an exception."""
        return self.log is not None


def sweep_preset(
    vehicle: Union[str, VehicleKind], kind: Union[str, BarrierKind]
) -> Dict[str, Tuple[float, ...]]:
    """
    Return the default parameter grid for a vehicle and barrier kind.

    Parameters
    ----------
    vehicle
        Vehicle kind.
    kind
        Barrier kind.

    Returns
    -------
    :class:`dict`
        Mapping of barrier field names to the values to sweep.

    Raises
    ------
    ConfigError
        For :attr:`tccbf.constants.BarrierKind.DC`, which has no parameters.
    """
    vehicle, kind = VehicleKind(vehicle), BarrierKind(kind)
    if kind == BarrierKind.DC:
        raise ConfigError("The distance constraint has no parameters to sweep.")
    if vehicle == VehicleKind.UNICYCLE:
        if kind == BarrierKind.ED:
            return {"alpha": (0.25, 0.5, 1.0), "alpha_e": (0.03, 0.05, 0.07)}
        return {"alpha_t": (0.03, 0.05, 0.07)}

    field = "alpha_e" if kind == BarrierKind.ED else "alpha_t"
    return {field: (0.01, 0.015, 0.02)}


def _override(parameters: Mapping[str, float]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for name, value in parameters.items():
        section, _, field = name.rpartition(".")
        out.setdefault(section or "barrier", {})[field] = value
    return out


def run_parameter_sweep(
    scenario: Scenario,
    grid: Mapping[str, Sequence[float]],
    opts: Optional[Options] = None,
) -> List[SweepPoint]:
    """
    Run ``scenario`` for every combination of parameter values.

    Parameters
    ----------
    scenario
        Base scenario.
    grid
        Mapping of parameter names to values. Plain names are barrier fields, dotted names
        such as ``'mpc.N'`` address other sections of the scenario.
    opts
        Options. If `None`, :attr:`tccbf.options` are used; ``num_workers > 1`` runs the
        grid points in threads.

    Returns
    -------
    :class:`list`
        One :class:`SweepPoint` per combination, in the order of :func:`itertools.product`.

    Raises
    ------
    ConfigError
        If the grid is empty.
    """
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ConfigError("empty parameter grid")

    simulator = Simulator(opts)
    names = list(grid)
    combos = [dict(zip(names, values)) for values in product(*(grid[n] for n in names))]
    logging.info(f"Sweeping `{len(combos)}` parameter combinations of `{names}`")

    def run_one(parameters: Dict[str, float]) -> SweepPoint:
        try:
            log = simulator.run(scenario.with_overrides(_override(parameters)))
        except Exception as e:  # noqa: B902
            logging.warning(f"Sweep point `{parameters}` failed: {e}")
            return SweepPoint(parameters, error=f"{type(e).__name__}: {e}")
        if log.error is not None:
            return SweepPoint(parameters, log=log, error=log.error)
        return SweepPoint(parameters, log=log)

    with tqdm(
        total=len(combos),
        unit="run",
        disable=not simulator._options.progress_bar,
    ) as pbar:
        if simulator._options.num_workers == 1:
            points = []
            for parameters in combos:
                points.append(run_one(parameters))
                pbar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=simulator._options.num_workers) as pool:
                points = []
                for point in pool.map(run_one, combos):
                    points.append(point)
                    pbar.update(1)

    return points
