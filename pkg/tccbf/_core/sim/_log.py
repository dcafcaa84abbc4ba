from typing import Any, Dict, List, Tuple, Union, Optional, Sequence
from pathlib import Path
import json

import attr

import numpy as np
import pandas as pd

from tccbf.constants import RunStatus, BarrierKind
from tccbf._core.sim._scenario import Scenario
from tccbf._core.barrier._functions import _value
from tccbf._core.barrier._geometry import Obstacle
from tccbf._core.models._integrate import Model_t
from tccbf.constants._pkg_constants import INPUT_COLUMNS, STATE_COLUMNS, Column

__all__ = ["TrajectoryLog", "log_columns", "barrier_snapshot"]

_BARRIER_COLUMNS = (
    (BarrierKind.DC, Column.H_DC),
    (BarrierKind.ED, Column.H_ED),
    (BarrierKind.TC, Column.H_TC),
)
_DIAGNOSTICS = (Column.STATUS, Column.SQP_ITERATIONS, Column.KKT_RESIDUAL, Column.MAX_SLACK)
# columns that differ between otherwise identical runs
_VOLATILE = (Column.SOLVE_TIME.value,)


def log_columns(vehicle: str) -> List[str]:
    """Return the column order of a trajectory log for ``vehicle``."""
    return (
        [Column.TIME.value]
        + list(STATE_COLUMNS[vehicle])
        + list(INPUT_COLUMNS[vehicle])
        + [Column.SPEED.value]
        + [c.value for _, c in _BARRIER_COLUMNS]
        + [Column.CLOSEST_DISTANCE.value]
        + [c.value for c in _DIAGNOSTICS]
        + [Column.SOLVE_TIME.value]
    )


def barrier_snapshot(
    model: Model_t, state: np.ndarray, obstacles: Sequence[Obstacle], scenario: Scenario
) -> Dict[str, float]:
    """
    Evaluate every barrier kind and the clearance at one state.

    Parameters
    ----------
    model
        Vehicle model, used to map the state to a ground pose.
    state
        State vector.
    obstacles
        Obstacles at the time of ``state``.
    scenario
        Scenario providing the barrier parameters.

    Returns
    -------
    :class:`dict`
        Ground speed, the smallest value of each barrier over the obstacles and the smallest
        distance to an obstacle boundary. Barrier values are `NaN` without obstacles.
    """
    pose = model.kinematics(state)
    out = {Column.SPEED.value: float(pose[3])}
    for kind, column in _BARRIER_COLUMNS:
        values = [_value(kind, *pose, o, scenario.barrier) for o in obstacles]
        out[column.value] = float(min(values)) if values else np.nan
    distances = [np.hypot(pose[0] - o.ox, pose[1] - o.oy) - o.o_r for o in obstacles]
    out[Column.CLOSEST_DISTANCE.value] = float(min(distances)) if distances else np.nan

    return out


@attr.s(eq=False, repr=False)
class TrajectoryLog:
    """
    Per-step record of a closed-loop run.

    Row ``k`` holds the time ``k T_s``, the state, the input applied from that state, the
    barrier values and the solver diagnostics. The final row of an arrived or timed-out run
    holds the last state with `NaN` inputs and no diagnostics.

    Parameters
    ----------
    scenario
        The simulated scenario.
    records
        One row per step, columns as in :func:`log_columns`.
    status
        How the run ended.
    error
        Message of the failure that aborted the run, if any.
    merit_histories
        Merit values ``(before, after)`` of the accepted SQP steps, per control step.
    """

    scenario: Scenario = attr.ib(validator=attr.validators.instance_of(Scenario))
    records: pd.DataFrame = attr.ib(validator=attr.validators.instance_of(pd.DataFrame))
    status: RunStatus = attr.ib(converter=RunStatus)
    error: Optional[str] = attr.ib(default=None)
    merit_histories: Tuple[Tuple[Tuple[float, float], ...], ...] = attr.ib(
        default=(), converter=tuple, repr=False
    )

    @classmethod
    def from_rows(
        cls,
        scenario: Scenario,
        rows: List[Dict[str, Any]],
        status: Union[str, RunStatus],
        error: Optional[str] = None,
        merit_histories: Sequence[Tuple[Tuple[float, float], ...]] = (),
    ) -> "TrajectoryLog":
        """Assemble a log from row dictionaries, filling absent columns with `NaN`."""
        columns = log_columns(scenario.vehicle.value)
        frame = pd.DataFrame(rows, columns=columns)
        frame[Column.STATUS.value] = frame[Column.STATUS.value].fillna("").astype(str)

        return cls(scenario, frame, status, error=error, merit_histories=merit_histories)

    @property
    def reached(self) -> bool:
        """Whether the vehicle reached the goal."""
        return self.status == RunStatus.ARRIVED

    @property
    def time(self) -> np.ndarray:  # noqa: D102
        return self.records[Column.TIME.value].to_numpy()

    @property
    def states(self) -> np.ndarray:
        """States, one row per step."""
        return self.records[list(STATE_COLUMNS[self.scenario.vehicle.value])].to_numpy()

    @property
    def inputs(self) -> np.ndarray:
        """Applied inputs, one row per step."""
        return self.records[list(INPUT_COLUMNS[self.scenario.vehicle.value])].to_numpy()

    def __len__(self) -> int:
        return len(self.records)

    def __copy__(self) -> "TrajectoryLog":
        return attr.evolve(self, records=self.records.copy())

    def to_frame(self) -> pd.DataFrame:
        """Return the records without timing columns, as written to CSV."""
        return self.records.drop(columns=list(_VOLATILE))

    def to_csv(self, path: Union[str, Path], float_format: Optional[str] = None) -> Path:
        """
        Write the records to CSV.

        Parameters
        ----------
        path
            Destination file.
        float_format
            Format of floats. If `None`, use :attr:`tccbf.options.float_format`.

        Returns
        -------
        :class:`pathlib.Path`
            The written file.
        """
        if float_format is None:
            from tccbf import options

            float_format = options.float_format

        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format=float_format, lineterminator="\n")

        return path

    def sidecar(self) -> Dict[str, Any]:
        """Return the configuration echo written next to the CSV."""
        from tccbf import __version__

        solve_time = self.records[Column.SOLVE_TIME.value]
        return {
            "scenario": self.scenario.to_dict(),
            "status": self.status.value,
            "error": self.error,
            "metadata": {
                "version": __version__,
                "columns": list(self.to_frame().columns),
                "steps": len(self),
                "total_solve_time": float(np.nansum(solve_time.to_numpy(dtype=float))),
            },
        }

    def write(
        self, directory: Union[str, Path], stem: Optional[str] = None
    ) -> Tuple[Path, Path]:
        """
        Write the CSV and its JSON sidecar.

        Parameters
        ----------
        directory
            Output directory, created if needed.
        stem
            File name without suffix. Defaults to ``<scenario>_<barrier>``.

        Returns
        -------
        :class:`tuple`
            Paths of the CSV and of the sidecar.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or f"{self.scenario.name}_{self.scenario.barrier.kind.value}"

        csv = self.to_csv(directory / f"{stem}.csv")
        sidecar = directory / f"{stem}.json"
        with open(sidecar, "w") as fout:
            json.dump(self.sidecar(), fout, indent=2, sort_keys=True)
            fout.write("\n")

        return csv, sidecar

    def __str__(self) -> str:
        return (
            f"<{self.__class__.__name__}[scenario={self.scenario.name!r}, "
            f"barrier={self.scenario.barrier.kind.value!r}, status={self.status.value!r}, "
            f"steps={len(self)}]>"
        )

    def __repr__(self) -> str:
        return str(self)
