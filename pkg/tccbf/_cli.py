"""Command line interface: ``tccbf {run,compare,sweep,levelset}``."""
from typing import Any, Dict, List, Tuple, Optional, Sequence
from pathlib import Path
import sys
import json
import logging
import argparse

import numpy as np
import pandas as pd

from tccbf.constants import ExitCode, RunStatus, BarrierKind
from tccbf._core.sim import (
    Scenario,
    get_scenario,
    run_scenario,
    sweep_preset,
    load_scenario,
    run_parameter_sweep,
)
from tccbf._core.utils import ConfigError, UnknownScenarioError
from tccbf._core.barrier import (
    GridSpec,
    Obstacle,
    BarrierConfig,
    level_set_grid,
    restricted_extent,
)
from tccbf._core.metrics import compare, emit_plots, compute_metrics

# flag -> (section, field) of the scenario
_OVERRIDES = {
    "alpha": ("barrier", "alpha"),
    "alpha_e": ("barrier", "alpha_e"),
    "alpha_t": ("barrier", "alpha_t"),
    "r_max": ("barrier", "r_max"),
    "R_s": ("barrier", "R_s"),
    "k": ("barrier", "k"),
    "horizon": ("mpc", "N"),
    "max_time": (None, "max_time"),
}


def _kinds(text: str) -> List[BarrierKind]:
    try:
        return [BarrierKind(k.strip()) for k in text.split(",") if k.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _grid_entry(text: str) -> Tuple[str, Tuple[float, ...]]:
    name, sep, values = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"Expected `name=v1,v2,...`, found `{text}`.")
    try:
        return name, tuple(float(v) for v in values.split(",") if v.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", help="Name of a builtin scenario.")
    source.add_argument(
        "--config", type=Path, help="Scenario JSON file, or the sidecar of a previous run."
    )
    group = parser.add_argument_group("overrides")
    group.add_argument("--alpha", type=float, help="Gain of the Euclidean barrier.")
    group.add_argument("--alpha-e", type=float, help="Decay rate of the Euclidean barrier.")
    group.add_argument("--alpha-t", type=float, help="Decay rate of the turning-circle barrier.")
    group.add_argument("--r-max", type=float, help="Turning rate of the turning circles.")
    group.add_argument("--R-s", dest="R_s", type=float, help="Safety radius [m].")
    group.add_argument("--k", type=float, help="Smoothing parameter of the smooth maximum.")
    group.add_argument("--horizon", type=int, help="Horizon length.")
    group.add_argument("--max-time", type=float, help="Simulated time limit [s].")


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    from tccbf import options

    parser.add_argument(
        "--output-dir",
        type=Path,
        default=options.output_dir,
        help="Output directory. Defaults to $TCCBF_OUTPUT_DIR or the configured one.",
    )
    parser.add_argument(
        "--no-plot", dest="plot", action="store_false", help="Do not write SVG plots."
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of the command line interface."""
    parser = argparse.ArgumentParser(
        prog="tccbf",
        description="Closed-loop NMPC simulations with turning-circle and Euclidean barriers.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="Increase the logging verbosity."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Simulate one scenario.")
    _add_scenario_args(run)
    run.add_argument("--barrier", type=BarrierKind, help="Barrier kind: ed, tc or dc.")
    _add_output_args(run)
    run.set_defaults(func=cmd_run)

    cmp = sub.add_parser("compare", help="Simulate one scenario with several barriers.")
    _add_scenario_args(cmp)
    cmp.add_argument(
        "--barriers", type=_kinds, default="dc,ed,tc", help="Comma-separated barrier kinds."
    )
    _add_output_args(cmp)
    cmp.set_defaults(func=cmd_compare)

    sweep = sub.add_parser("sweep", help="Sweep barrier parameters over a grid.")
    _add_scenario_args(sweep)
    sweep.add_argument("--barrier", type=BarrierKind, default=BarrierKind.ED)
    sweep.add_argument(
        "--grid",
        type=_grid_entry,
        action="append",
        help="Parameter values as `name=v1,v2,...`; repeat for more parameters. "
        "Defaults to the preset of the vehicle and barrier.",
    )
    sweep.add_argument("--workers", type=int, help="Number of worker threads.")
    _add_output_args(sweep)
    sweep.set_defaults(func=cmd_sweep)

    ls = sub.add_parser("levelset", help="Evaluate the barriers on a grid around an obstacle.")
    ls.add_argument("--speed", type=float, default=1.5, help="Vehicle speed [m/s].")
    ls.add_argument("--course", type=float, default=0.0, help="Vehicle course [rad].")
    ls.add_argument("--rmax", "--r-max", dest="r_max", type=float, default=0.3)
    ls.add_argument("--alpha", type=float, default=0.5)
    ls.add_argument("--k", type=float, default=5.0)
    ls.add_argument("--R-s", dest="R_s", type=float, default=0.5)
    ls.add_argument("--o-r", dest="o_r", type=float, default=2.0, help="Obstacle radius [m].")
    ls.add_argument("--resolution", type=float, default=0.1, help="Grid spacing [m].")
    ls.add_argument(
        "--extent",
        type=float,
        nargs=4,
        default=(-15.0, 15.0, -10.0, 10.0),
        metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"),
        help="Grid bounds [m].",
    )
    _add_output_args(ls)
    ls.set_defaults(func=cmd_levelset)

    return parser


def _scenario(args: argparse.Namespace) -> Scenario:
    scenario = get_scenario(args.scenario) if args.scenario else load_scenario(args.config)
    overrides: Dict[str, Any] = {}
    for flag, (section, field) in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if section is None:
            overrides[field] = value
        else:
            overrides.setdefault(section, {})[field] = value
    if overrides:
        scenario = scenario.with_overrides(overrides)
    if getattr(args, "barrier", None) is not None:
        scenario = scenario.with_barrier(args.barrier)

    return scenario


def _jsonable(values: Dict[str, Any]) -> Dict[str, Any]:
    return {
        k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in values.items()
    }


def _run_exit_code(status: RunStatus) -> ExitCode:
    return {
        RunStatus.ARRIVED: ExitCode.OK,
        RunStatus.TIMEOUT: ExitCode.TIMEOUT,
        RunStatus.FAILED: ExitCode.SOLVER_FAILURE,
    }[status]


def cmd_run(args: argparse.Namespace) -> ExitCode:
    """Simulate a scenario and write its log, sidecar, metrics and plots."""
    scenario = _scenario(args)
    log = run_scenario(scenario)
    metrics = compute_metrics(log)

    stem = f"{scenario.name}_{scenario.barrier.kind.value}"
    paths = list(log.write(args.output_dir, stem))
    summary = args.output_dir / f"{stem}_metrics.json"
    with open(summary, "w") as fout:
        json.dump(_jsonable(metrics.to_dict()), fout, indent=2, sort_keys=True)
        fout.write("\n")
    paths.append(summary)
    if args.plot and len(log):
        paths.extend(emit_plots(log, args.output_dir, stem))

    print(
        f"{scenario.name} {scenario.barrier.kind.label}: status={metrics.label} "
        f"t_a={metrics.t_a:.3f} e_speed={metrics.e_speed:.4f} e_cte={metrics.e_cte:.4f} "
        f"d_min={metrics.d_min:.3f}"
    )
    if log.error is not None:
        print(f"error: {log.error}", file=sys.stderr)
    for path in paths:
        logging.info(f"Wrote `{path}`")

    return _run_exit_code(log.status)


def cmd_compare(args: argparse.Namespace) -> ExitCode:
    """Simulate a scenario under several barriers and write the comparison table."""
    base = _scenario(args)
    kinds = args.barriers
    if not kinds:
        raise ConfigError("Expected at least one barrier kind to compare.")

    logs = []
    for kind in kinds:
        scenario = base.with_barrier(kind)
        log = run_scenario(scenario)
        stem = f"{scenario.name}_{kind.value}"
        log.write(args.output_dir, stem)
        if args.plot and len(log):
            emit_plots(log, args.output_dir, stem)
        logs.append(log)

    table = compare(logs)
    stem = f"compare_{base.name}"
    table.to_csv(args.output_dir / f"{stem}.csv")
    with open(args.output_dir / f"{stem}.txt", "w") as fout:
        fout.write(table.to_text())
    print(table.to_text(), end="")

    return _run_exit_code(table.worst_status)


def cmd_sweep(args: argparse.Namespace) -> ExitCode:
    """Run a parameter sweep and write one aggregated CSV."""
    from tccbf import options

    scenario = _scenario(args)
    grid = dict(args.grid) if args.grid else sweep_preset(scenario.vehicle, args.barrier)
    workers = options.num_workers if args.workers is None else args.workers

    with options as opts:
        opts.num_workers = workers
        points = run_parameter_sweep(scenario, grid, opts=opts)

    rows = []
    for i, point in enumerate(points):
        row: Dict[str, Any] = {"run": i, **point.parameters}
        if point.log is not None:
            row.update(compute_metrics(point.log).to_dict())
            stem = f"sweep_{scenario.name}_{args.barrier.value}_{i:03d}"
            point.log.write(args.output_dir, stem)
        else:
            row["status"] = RunStatus.FAILED.value
        row["error"] = point.error or ""
        rows.append(row)

    path = args.output_dir / f"sweep_{scenario.name}_{args.barrier.value}.csv"
    pd.DataFrame(rows).to_csv(
        path, index=False, float_format=options.float_format, lineterminator="\n"
    )
    print(f"Wrote `{len(rows)}` sweep rows to `{path}`")

    return ExitCode.OK


def cmd_levelset(args: argparse.Namespace) -> ExitCode:
    """Evaluate both barriers on a grid and report the restricted-region extents."""
    x_min, x_max, y_min, y_max = args.extent
    spec = GridSpec(x_min, x_max, y_min, y_max, resolution=args.resolution)
    obs = Obstacle(0.0, 0.0, args.o_r)
    cfg = BarrierConfig(alpha=args.alpha, r_max=args.r_max, R_s=args.R_s, k=args.k)

    grids = [
        level_set_grid(kind, cfg, obs, args.course, args.speed, grid=spec)
        for kind in (BarrierKind.ED, BarrierKind.TC)
    ]
    if args.plot:
        emit_plots(grids, args.output_dir, "levelset")
    else:
        for grid in grids:
            grid.to_csv(args.output_dir / f"levelset_{grid.kind.value}.csv")

    for grid in grids:
        across, along = restricted_extent(grid, "y"), restricted_extent(grid, "x")
        print(
            f"{grid.kind.label}: extent across course {across:.3f} m, "
            f"along course {along:.3f} m"
        )

    return ExitCode.OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the command line interface.

    Parameters
    ----------
    argv
        Arguments, without the program name. Defaults to :data:`sys.argv`.

    Returns
    -------
    :class:`int`
        One of :class:`tccbf.constants.ExitCode`.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCode.CONFIG_ERROR if e.code else ExitCode.OK

    logging.basicConfig(
        level=max(logging.WARNING - 10 * args.verbose, logging.DEBUG),
        format="%(levelname)s: %(message)s",
    )

    try:
        args.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"error: cannot create `{args.output_dir}`: {e}", file=sys.stderr)
        return ExitCode.OUTPUT_ERROR

    try:
        return args.func(args)
    except UnknownScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.UNKNOWN_SCENARIO
    except (ConfigError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.OUTPUT_ERROR
