from typing import Union, Optional
from pathlib import Path
import logging

import attr

import numpy as np
import pandas as pd

from tccbf.constants import BarrierKind
from tccbf._core.barrier._geometry import Obstacle, BarrierConfig
from tccbf._core.barrier._functions import _value


def _positive(_instance, attribute: attr.Attribute, value: float) -> None:
    if not value > 0:
        raise ValueError(f"Expected `{attribute.name}` to be positive, found `{value}`.")


@attr.s(frozen=True)
class GridSpec:
    """
    Rectangular grid of evaluation nodes.

    Parameters
    ----------
    x_min, x_max, y_min, y_max
        Bounds of the grid [m], inclusive.
    resolution
        Node spacing [m].
    """

    x_min: float = attr.ib(default=-15.0, converter=float)
    x_max: float = attr.ib(default=15.0, converter=float)
    y_min: float = attr.ib(default=-10.0, converter=float)
    y_max: float = attr.ib(default=10.0, converter=float)
    resolution: float = attr.ib(default=0.1, converter=float, validator=_positive)

    def __attrs_post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"Expected ordered grid bounds, found `{self}`.")

    def axis(self, lo: float, hi: float) -> np.ndarray:
        """Return the nodes between ``lo`` and ``hi``."""
        n = int(np.floor((hi - lo) / self.resolution + 1e-9)) + 1
        return lo + self.resolution * np.arange(n)

    @property
    def xs(self) -> np.ndarray:  # noqa: D102
        return self.axis(self.x_min, self.x_max)

    @property
    def ys(self) -> np.ndarray:  # noqa: D102
        return self.axis(self.y_min, self.y_max)


@attr.s(frozen=True, eq=False)
class LevelSetGrid:
    """Barrier values on a grid, ``values[i, j]`` at ``(xs[j], ys[i])``."""

    kind: BarrierKind = attr.ib()
    cfg: BarrierConfig = attr.ib()
    obs: Obstacle = attr.ib()
    course: float = attr.ib()
    speed: float = attr.ib()
    xs: np.ndarray = attr.ib(repr=False)
    ys: np.ndarray = attr.ib(repr=False)
    values: np.ndarray = attr.ib(repr=False)

    @property
    def header(self) -> str:
        """One-line description of the grid."""
        return (
            f"# kind={self.kind.value} course={self.course:g} speed={self.speed:g} "
            f"alpha={self.cfg.alpha:g} r_max={self.cfg.r_max:g} k={self.cfg.k:g} "
            f"R_s={self.cfg.R_s:g} obstacle=({self.obs.ox:g},{self.obs.oy:g},{self.obs.o_r:g})"
        )

    def to_frame(self) -> pd.DataFrame:
        """Return the grid as long-format ``(x, y, value)`` rows."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return pd.DataFrame({"x": X.ravel(), "y": Y.ravel(), "value": self.values.ravel()})

    def to_csv(self, path: Union[str, Path], float_format: Optional[str] = None) -> Path:
        """Write the grid as CSV preceded by :attr:`header`."""
        from tccbf import options

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fout:
            fout.write(self.header + "\n")
            self.to_frame().to_csv(
                fout,
                index=False,
                float_format=options.float_format if float_format is None else float_format,
            )
        logging.info(f"Wrote level-set grid to `{path}`")

        return path


def level_set_grid(
    kind: Union[str, BarrierKind],
    cfg: BarrierConfig,
    obs: Obstacle,
    course: float,
    speed: float,
    grid: Optional[GridSpec] = None,
) -> LevelSetGrid:
    """
    Evaluate a barrier on every node of a grid with fixed course and speed.

    Parameters
    ----------
    kind
        Barrier to evaluate.
    cfg
        Barrier parameters.
    obs
        Obstacle; its velocity enters the Euclidean barrier as relative velocity.
    course
        Course of the vehicle [rad].
    speed
        Ground speed of the vehicle [m/s].
    grid
        Grid specification. If `None`, use the defaults of :class:`GridSpec`.

    Returns
    -------
    :class:`LevelSetGrid`
        The values; the zero level set bounds the restricted region.
    """
    kind = BarrierKind(kind)
    grid = GridSpec() if grid is None else grid
    xs, ys = grid.xs, grid.ys
    X, Y = np.meshgrid(xs, ys)

    values = _value(kind, X, Y, course, speed, obs, cfg)
    logging.debug(f"Evaluated `{kind.value}` barrier on a `{values.shape}` grid")

    return LevelSetGrid(
        kind=kind,
        cfg=cfg,
        obs=obs,
        course=float(course),
        speed=float(speed),
        xs=xs,
        ys=ys,
        values=np.asarray(values, dtype=float),
    )


def restricted_extent(grid: LevelSetGrid, axis: str = "y") -> float:
    """
    Extent of the restricted region (negative barrier values) along an axis.

    Parameters
    ----------
    grid
        Level-set grid.
    axis
        Either `'x'` or `'y'`.

    Returns
    -------
    :class:`float`
        ``max - min`` of the node coordinates inside the region, `0` if the region is empty.
    """
    if axis not in ("x", "y"):
        raise ValueError(f"Expected `axis` to be `'x'` or `'y'`, found `{axis!r}`.")

    mask = grid.values < 0
    if not mask.any():
        return 0.0
    coords = (grid.xs[None, :] if axis == "x" else grid.ys[:, None]) * np.ones_like(
        grid.values
    )

    return float(coords[mask].max() - coords[mask].min())
