from typing import Any, Dict, List, Union, Optional, Sequence
from pathlib import Path
import logging

import attr

import numpy as np
import pandas as pd

from tccbf.constants import RunStatus, SolverStatus
from tccbf._core.sim._log import TrajectoryLog
from tccbf._core.utils._docs import d
from tccbf._core.utils._errors import ConfigError
from tccbf._core.sim._scenario import Scenario
from tccbf.constants._pkg_constants import Column

__all__ = ["Metrics", "ComparisonTable", "compute_metrics", "compare", "arrival_time"]

#: metrics where smaller is better, flagged in comparisons
RANKED = ("t_a", "e_speed", "e_cte")


@attr.s(frozen=True)
class Metrics:
    """
    Path-following performance of one run.

    Parameters
    ----------
    t_a
        Arrival time [s]; `NaN` if the goal was not reached.
    e_speed
        Mean absolute speed error over ``[0, t_a]`` [m/s].
    e_cte
        Mean absolute cross-track error over ``[0, t_a]`` [m].
    d_min
        Smallest distance to an obstacle boundary [m]; `NaN` without obstacles.
    status
        How the run ended.
    degraded
        Whether any solve softened the barrier constraints.
    """

    t_a: float = attr.ib(converter=float)
    e_speed: float = attr.ib(converter=float)
    e_cte: float = attr.ib(converter=float)
    d_min: float = attr.ib(converter=float)
    status: RunStatus = attr.ib(converter=RunStatus)
    degraded: bool = attr.ib(default=False, converter=bool)

    @property
    def reached(self) -> bool:
        """Whether the goal was reached."""
        return self.status == RunStatus.ARRIVED and np.isfinite(self.t_a)

    @property
    def label(self) -> str:
        """Status shown in tables; arrivals with softened barriers read ``degraded``."""
        if self.degraded and self.status == RunStatus.ARRIVED:
            return "degraded"
        return self.status.value

    def to_dict(self) -> Dict[str, Any]:  # noqa: D102
        return {**attr.asdict(self), "status": self.status.value}


def arrival_time(time: np.ndarray, x: np.ndarray, goal_x: float) -> float:
    """
    Time at which ``x`` first reaches ``goal_x``, linearly interpolated between samples.

    Returns
    -------
    :class:`float`
        The time, or `NaN` if ``goal_x`` is never reached.
    """
    time, x = np.asarray(time, dtype=float), np.asarray(x, dtype=float)
    hits = np.flatnonzero(x >= goal_x)
    if not hits.size:
        return np.nan
    k = int(hits[0])
    if k == 0:
        return float(time[0])

    frac = (goal_x - x[k - 1]) / (x[k] - x[k - 1])
    return float(time[k - 1] + frac * (time[k] - time[k - 1]))


def _check_scenario(log: TrajectoryLog, scenario: Optional[Scenario]) -> Scenario:
    if scenario is None:
        return log.scenario
    if scenario.to_dict() != log.scenario.to_dict():
        raise ConfigError(
            f"Log of scenario `{log.scenario.name}` does not match scenario `{scenario.name}`."
        )
    return scenario


@d.dedent
def compute_metrics(log: TrajectoryLog, scenario: Optional[Scenario] = None) -> Metrics:
    """
    Compute arrival time, tracking errors and clearance of a run.

    Averages are taken over the logged steps with ``t <= t_a``, or over the whole log when the
    goal was not reached. The speed is the forward speed of a unicycle and the speed over
    ground of a vessel.

    Parameters
    ----------
    %(log)s
    scenario
        Scenario of the run. Defaults to the scenario of ``log``.

    Returns
    -------
    :class:`Metrics`
        The metrics.
    """
    scenario = _check_scenario(log, scenario)
    frame = log.records
    if not len(frame):
        return Metrics(np.nan, np.nan, np.nan, np.nan, log.status)

    time = frame[Column.TIME.value].to_numpy(dtype=float)
    t_a = (
        arrival_time(time, frame[Column.X.value].to_numpy(dtype=float), scenario.goal_x)
        if log.reached
        else np.nan
    )
    window = frame[time <= t_a + 1e-12] if np.isfinite(t_a) else frame

    speed = window[Column.SPEED.value].to_numpy(dtype=float)
    y = window[Column.Y.value].to_numpy(dtype=float)
    distance = frame[Column.CLOSEST_DISTANCE.value].to_numpy(dtype=float)

    metrics = Metrics(
        t_a=t_a,
        e_speed=np.mean(np.abs(speed - scenario.u_r)),
        e_cte=np.mean(np.abs(y)),
        d_min=np.nanmin(distance) if np.isfinite(distance).any() else np.nan,
        status=log.status,
        degraded=(frame[Column.STATUS.value] == SolverStatus.DEGRADED_FEASIBILITY.value).any(),
    )
    logging.debug(f"Computed `{metrics}` for `{log}`")

    return metrics


@attr.s(frozen=True, eq=False)
class ComparisonTable:
    """
    Metrics of several controllers on one scenario.

    Parameters
    ----------
    scenario
        Name of the shared scenario.
    frame
        One row per controller, columns ``t_a``, ``e_speed``, ``e_cte``, ``d_min``, ``status``,
        ``degraded``.
    best
        Controllers with the smallest value per ranked column.
    """

    scenario: str = attr.ib()
    frame: pd.DataFrame = attr.ib()
    best: Dict[str, List[str]] = attr.ib()

    def is_best(self, controller: str, column: str) -> bool:
        """Whether ``controller`` is flagged best in ``column``."""
        return controller in self.best.get(column, ())

    @property
    def worst_status(self) -> RunStatus:
        """Most severe run outcome; `failed` before `timeout` before `arrived`."""
        statuses = {RunStatus(s) for s in self.frame["status"]}
        for status in (RunStatus.FAILED, RunStatus.TIMEOUT):
            if status in statuses:
                return status
        return RunStatus.ARRIVED

    def to_frame(self) -> pd.DataFrame:
        """Return the metrics with one boolean ``best_<column>`` flag per ranked column."""
        out = self.frame.copy()
        for column in RANKED:
            out[f"best_{column}"] = [self.is_best(c, column) for c in out.index]
        return out

    def to_csv(self, path: Union[str, Path], float_format: Optional[str] = None) -> Path:
        """Write :meth:`to_frame` to CSV."""
        if float_format is None:
            from tccbf import options

            float_format = options.float_format

        path = Path(path)
        self.to_frame().to_csv(
            path, index_label="controller", float_format=float_format, lineterminator="\n"
        )
        return path

    def to_text(self) -> str:
        """Return an aligned plain-text table; best values carry a trailing ``*``."""
        rows = []
        for controller, metrics in self.frame.iterrows():
            row = {"controller": controller}
            for column in ("t_a", "e_speed", "e_cte", "d_min"):
                value = metrics[column]
                text = "-" if not np.isfinite(value) else f"{value:.3f}"
                row[column] = text + ("*" if self.is_best(controller, column) else "")
            degraded = metrics["degraded"] and metrics["status"] == RunStatus.ARRIVED.value
            row["status"] = "degraded" if degraded else metrics["status"]
            rows.append(row)

        header = f"# scenario: {self.scenario}\n"
        return header + pd.DataFrame(rows).to_string(index=False) + "\n"

    def __str__(self) -> str:
        return self.to_text()


def _scenario_key(scenario: Scenario) -> Dict[str, Any]:
    data = scenario.to_dict()
    data.pop("barrier")
    return data


def compare(
    logs: Sequence[TrajectoryLog],
    scenario: Optional[Scenario] = None,
    labels: Optional[Sequence[str]] = None,
) -> ComparisonTable:
    """
    Tabulate the metrics of several runs of one scenario.

    Parameters
    ----------
    logs
        Runs to compare; they may differ only in their barrier settings.
    scenario
        Expected scenario. If `None`, the scenario of the first log.
    labels
        Row labels. Defaults to the controller names, e.g. ``'MPC-TCCBF'``.

    Returns
    -------
    :class:`ComparisonTable`
        The table. Runs that did not reach the goal are never flagged best.

    Raises
    ------
    ConfigError
        If the runs belong to different scenarios.
    """
    if not len(logs):
        raise ValueError("Expected at least one log to compare.")
    reference = logs[0].scenario if scenario is None else scenario
    for log in logs:
        if _scenario_key(log.scenario) != _scenario_key(reference):
            raise ConfigError(
                f"Cannot compare runs of different scenarios: `{log.scenario.name}` "
                f"and `{reference.name}`."
            )

    if labels is None:
        labels = [log.scenario.barrier.kind.label for log in logs]
    if len(set(labels)) != len(labels) or len(labels) != len(logs):
        raise ValueError(f"Expected one unique label per log, found `{list(labels)}`.")

    metrics = [compute_metrics(log) for log in logs]
    frame = pd.DataFrame(
        [m.to_dict() for m in metrics], index=pd.Index(list(labels), name="controller")
    )

    best: Dict[str, List[str]] = {}
    reached = [label for label, m in zip(labels, metrics) if m.reached]
    for column in RANKED:
        values = frame.loc[reached, column] if reached else frame.loc[[], column]
        values = values[np.isfinite(values)]
        best[column] = list(values.index[values == values.min()]) if len(values) else []

    return ComparisonTable(scenario=reference.name, frame=frame, best=best)
