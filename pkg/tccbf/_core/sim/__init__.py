from tccbf._core.sim._log import TrajectoryLog, log_columns, barrier_snapshot
from tccbf._core.sim._run import (
    Simulator,
    SweepPoint,
    run_scenario,
    sweep_preset,
    run_parameter_sweep,
)
from tccbf._core.sim._scenario import (
    Scenario,
    get_scenario,
    load_scenario,
    builtin_scenarios,
    propagate_obstacles,
)
