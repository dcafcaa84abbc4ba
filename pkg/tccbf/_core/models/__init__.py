from tccbf._core.models._asv import (
    AsvModel,
    AsvInput,
    AsvState,
    AsvParams,
    sog_cog,
    asv_deriv,
    asv_jacobians,
    load_asv_params,
    thrust_allocation,
)
from tccbf._core.models._unicycle import (
    UnicycleInput,
    UnicycleModel,
    UnicycleState,
    unicycle_deriv,
    unicycle_jacobians,
)
from tccbf._core.models._integrate import (
    rollout,
    rk4_step,
    dynamics_jacobians,
    rk4_step_jacobians,
    finite_difference_jacobians,
)
