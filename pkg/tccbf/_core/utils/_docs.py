from docrep import DocstringProcessor

_pose = """\
pose
    Position, course and ground speed of the vehicle."""
_obstacle = """\
obs
    Circular obstacle."""
_cfg = """\
cfg
    Barrier parameters."""
_deriv_fn = """\
deriv_fn
    Continuous-time dynamics ``f(state, input) -> state derivative``. Either
    :func:`tccbf.models.unicycle_deriv` or a partial of :func:`tccbf.models.asv_deriv`."""
_log = """\
log
    Trajectory log of a closed-loop run."""

d = DocstringProcessor(
    pose=_pose,
    obstacle=_obstacle,
    cfg=_cfg,
    deriv_fn=_deriv_fn,
    log=_log,
)
