from tccbf._core.barrier._geometry import (
    Obstacle,
    BarrierConfig,
    PlanarKinematicPose,
    turning_radius,
    turning_centers,
)
from tccbf._core.barrier._levelset import (
    GridSpec,
    LevelSetGrid,
    level_set_grid,
    restricted_extent,
)
from tccbf._core.barrier._functions import (
    ed_cbf,
    tc_cbf,
    euclid_h,
    smooth_max,
    euclid_h_dot,
    barrier_value,
    tc_components,
    barrier_gradient,
    discrete_cbf_residual,
    barrier_value_and_gradient,
)
