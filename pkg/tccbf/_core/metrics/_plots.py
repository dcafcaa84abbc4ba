from typing import List, Union, Optional, Sequence
from pathlib import Path
import logging

from matplotlib.figure import Figure
from matplotlib.patches import Circle
import matplotlib

import numpy as np

from tccbf.constants import BarrierKind, VehicleKind
from tccbf._core.sim._log import TrajectoryLog
from tccbf._core.sim._scenario import propagate_obstacles
from tccbf._core.barrier._geometry import PlanarKinematicPose, turning_radius, turning_centers
from tccbf._core.barrier._levelset import LevelSetGrid
from tccbf.constants._pkg_constants import INPUT_COLUMNS, Column

__all__ = ["emit_plots", "snapshot_times"]

_SNAPSHOT_INTERVAL = {VehicleKind.UNICYCLE: 2.5, VehicleKind.ASV: 6.0}
# fixed salt and no date keep the SVG output byte-identical
_RC = {"svg.hashsalt": "tccbf", "svg.fonttype": "none"}
_METADATA = {"Date": None}

Plottable_t = Union[TrajectoryLog, LevelSetGrid, Sequence[LevelSetGrid]]


def snapshot_times(log: TrajectoryLog) -> np.ndarray:
    """Times at which the trajectory plot draws the obstacles and turning circles."""
    interval = _SNAPSHOT_INTERVAL[log.scenario.vehicle]
    return np.arange(0.0, log.time[-1] + 1e-9, interval)


def _save(fig: Figure, path: Path) -> Path:
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata=_METADATA)
    logging.info(f"Wrote figure to `{path}`")
    return path


def _trajectory_axes(ax, log: TrajectoryLog) -> None:
    scenario = log.scenario
    model = scenario.model()
    frame = log.records
    ax.plot(frame[Column.X.value], frame[Column.Y.value], color="C0", label="vehicle")
    ax.axhline(0.0, color="grey", lw=0.8, ls=":", label="reference")

    for t in snapshot_times(log):
        k = int(np.argmin(np.abs(log.time - t)))
        for obs in propagate_obstacles(scenario.obstacles, float(log.time[k])):
            ax.add_patch(Circle((obs.ox, obs.oy), obs.o_r, color="C3", alpha=0.25, lw=0))
            ax.add_patch(
                Circle(
                    (obs.ox, obs.oy),
                    obs.o_r + scenario.barrier.R_s,
                    fill=False,
                    color="C3",
                    lw=0.5,
                )
            )
        x, y, course, speed = model.kinematics(log.states[k])
        pose = PlanarKinematicPose(x, y, course, max(speed, 0.0))
        R = turning_radius(pose.speed, scenario.barrier.r_max)
        for center in turning_centers(pose, R):
            ax.add_patch(Circle(center, R, fill=False, color="C2", lw=0.5, ls="--"))
        ax.plot([x], [y], marker="o", ms=3, color="C0")

    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper right", fontsize="small")


def _series_axes(axes, log: TrajectoryLog) -> None:
    scenario = log.scenario
    frame = log.records
    t = frame[Column.TIME.value]

    ax = axes[0]
    if scenario.barrier.kind == BarrierKind.DC:
        ax.plot(t, frame[Column.H_DC.value], label="h_dc")
    else:
        ax.plot(t, frame[Column.H_ED.value], label="h_ed")
        ax.plot(t, frame[Column.H_TC.value], label="h_tc")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("CBF")
    ax.legend(loc="upper right", fontsize="small")

    ax = axes[1]
    ax.plot(t, frame[Column.CLOSEST_DISTANCE.value])
    ax.axhline(scenario.barrier.R_s, color="C3", lw=0.5, ls="--")
    ax.set_ylabel("distance [m]")

    ax = axes[2]
    ax.plot(t, frame[Column.SPEED.value])
    ax.axhline(scenario.u_r, color="grey", lw=0.5, ls=":")
    ax.set_ylabel("speed [m/s]")

    ax = axes[3]
    for name in INPUT_COLUMNS[scenario.vehicle.value]:
        ax.step(t, frame[name], where="post", label=name)
    ax.set_ylabel("input")
    ax.set_xlabel("t [s]")
    ax.legend(loc="upper right", fontsize="small")


def _plot_log(log: TrajectoryLog, directory: Path, stem: str) -> List[Path]:
    fig = Figure(figsize=(12, 6), layout="constrained")
    left, right = fig.subfigures(1, 2, width_ratios=(3, 2))
    _trajectory_axes(left.subplots(), log)
    _series_axes(right.subplots(4, 1, sharex=True), log)
    fig.suptitle(f"{log.scenario.name}: {log.scenario.barrier.kind.label}")

    return [log.to_csv(directory / f"{stem}.csv"), _save(fig, directory / f"{stem}.svg")]


def _plot_grid(grid: LevelSetGrid, directory: Path, stem: str) -> List[Path]:
    fig = Figure(figsize=(7, 5), layout="constrained")
    ax = fig.subplots()
    bound = max(float(np.nanmax(np.abs(grid.values))), 1e-9)
    levels = np.linspace(-bound, bound, 21)
    cs = ax.contourf(grid.xs, grid.ys, grid.values, levels=levels, cmap="RdBu")
    ax.contour(grid.xs, grid.ys, grid.values, levels=[0.0], colors="k")
    obs = grid.obs
    ax.add_patch(Circle((obs.ox, obs.oy), obs.o_r, fill=False, color="k", ls=":"))
    fig.colorbar(cs, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{grid.kind.label}, speed {grid.speed:g} m/s, course {grid.course:g} rad")

    return [grid.to_csv(directory / f"{stem}.csv"), _save(fig, directory / f"{stem}.svg")]


def _plot_zero_levels(grids: Sequence[LevelSetGrid], directory: Path, stem: str) -> Path:
    fig = Figure(figsize=(7, 5), layout="constrained")
    ax = fig.subplots()
    for i, grid in enumerate(grids):
        ax.contour(grid.xs, grid.ys, grid.values, levels=[0.0], colors=f"C{i}")
        ax.plot([], [], color=f"C{i}", label=grid.kind.label)
    obs = grids[0].obs
    ax.add_patch(Circle((obs.ox, obs.oy), obs.o_r, color="grey", alpha=0.3))
    ax.set_aspect("equal")
    ax.legend(loc="upper right")

    return _save(fig, directory / f"{stem}.svg")


def emit_plots(
    target: Plottable_t, directory: Union[str, Path], stem: Optional[str] = None
) -> List[Path]:
    """
    Render a trajectory log or level-set grids to SVG, next to the plotted data as CSV.

    A log gives one figure with the trajectory, obstacle snapshots and turning circles on the
    left, and the barrier values, clearance, speed and inputs over time on the right. A grid
    gives a filled contour plot with its zero level; several grids additionally give an
    overlay of their zero levels.

    Parameters
    ----------
    target
        What to plot.
    directory
        Output directory, created if needed.
    stem
        File name without suffix.

    Returns
    -------
    :class:`list`
        Paths of the written files.

    Raises
    ------
    ValueError
        If there is nothing to plot.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    if isinstance(target, TrajectoryLog):
        if not len(target):
            raise ValueError("nothing to plot")
        stem = stem or f"{target.scenario.name}_{target.scenario.barrier.kind.value}"
        return _plot_log(target, directory, stem)

    if isinstance(target, LevelSetGrid):
        return _plot_grid(target, directory, stem or f"levelset_{target.kind.value}")

    grids = list(target)
    if not grids:
        raise ValueError("nothing to plot")
    stem = stem or "levelset"
    paths: List[Path] = []
    for grid in grids:
        paths.extend(_plot_grid(grid, directory, f"{stem}_{grid.kind.value}"))
    paths.append(_plot_zero_levels(grids, directory, stem))

    return paths
