from tccbf.constants._constants import (
    ExitCode,
    RunStatus,
    BarrierKind,
    VehicleKind,
    ScenarioName,
    SolverStatus,
)
