from tccbf._core.mpc._qp import QpSolution, QuadraticProgram, qp_subproblem_solve
from tccbf._core.mpc._sqp import (
    WarmStart,
    SolverResult,
    sqp_solve,
    cold_start,
    break_symmetry,
    shift_warm_start,
)
from tccbf._core.mpc._config import MpcConfig, SolverSettings, default_mpc_config
from tccbf._core.mpc._problem import (
    Nlp,
    OcpProblem,
    Linearization,
    transcribe,
    kkt_residual,
    evaluate_cost,
    build_reference,
)
