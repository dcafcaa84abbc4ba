from os import environ
from typing import Optional
from pathlib import Path

from tccbf.constants._constants import PrettyEnumMixin


class DEFAULT_OPTIONS:
    """Default options for :attr:`tccbf.options`."""

    output_dir: Path = Path(environ.get("TCCBF_OUTPUT_DIR", "") or "tccbf_out")
    progress_bar: bool = True
    num_workers: int = 1
    cache_dir: Optional[Path] = None
    float_format: str = "%.10g"


class Column(PrettyEnumMixin):
    """Column names of a trajectory log."""

    TIME = "t"
    X = "x"
    Y = "y"
    PSI = "psi"
    SURGE = "u"
    SWAY = "v"
    YAW_RATE = "r"
    SPEED = "speed"
    H_DC = "h_dc"
    H_ED = "h_ed"
    H_TC = "h_tc"
    CLOSEST_DISTANCE = "closest_distance"
    STATUS = "solver_status"
    SQP_ITERATIONS = "sqp_iterations"
    KKT_RESIDUAL = "kkt_residual"
    MAX_SLACK = "max_slack"
    SOLVE_TIME = "solve_time"


#: state column names per vehicle
STATE_COLUMNS = {
    "unicycle": ("x", "y", "psi", "u"),
    "asv": ("x", "y", "psi", "u", "v", "r"),
}
#: input column names per vehicle
INPUT_COLUMNS = {
    "unicycle": ("in_r", "in_a"),
    "asv": ("F_l", "F_r"),
}

#: guard on line-of-sight and turning-circle distances [m]
EPS_DISTANCE = 1e-6
#: slack above which a solve is reported as degraded
SLACK_TOL = 1e-6
#: lateral offset below which an obstacle counts as dead ahead [m]
SYMMETRY_TOL = 1e-3
