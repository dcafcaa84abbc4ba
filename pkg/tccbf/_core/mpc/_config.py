from typing import Tuple, Union

import attr

import numpy as np

from tccbf.constants import VehicleKind


def _to_tuple(value) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(value, dtype=float)))


def _non_negative_entries(_instance, attribute: attr.Attribute, value) -> None:
    if any(v < 0 for v in value):
        raise ValueError(
            f"Expected all entries of `{attribute.name}` to be non-negative, found `{value}`."
        )


def _positive(_instance, attribute: attr.Attribute, value) -> None:
    if not value > 0:
        raise ValueError(f"Expected `{attribute.name}` to be positive, found `{value}`.")


def _non_negative(_instance, attribute: attr.Attribute, value) -> None:
    if value < 0:
        raise ValueError(f"Expected `{attribute.name}` to be non-negative, found `{value}`.")


def _in_unit_interval(_instance, attribute: attr.Attribute, value) -> None:
    if not 0 < value < 1:
        raise ValueError(
            f"Expected `{attribute.name}` to be in the interval `(0, 1)`, found `{value}`."
        )


@attr.s(frozen=True)
class SolverSettings:
    """
    Settings of the SQP solver.

    Parameters
    ----------
    max_sqp_iters
        Maximum number of SQP iterations per control step.
    kkt_tol
        Tolerance on the KKT residual.
    slack_penalty
        L1 penalty on the slack variables of the barrier rows.
    line_search_shrink
        Step shrink factor of the backtracking line search.
    max_line_search
        Maximum number of backtracking steps.
    regularization
        Initial Levenberg regularization of the QP Hessian; grows ten-fold on QP failure.
    max_qp_iters
        Maximum number of active-set iterations per QP.
    symmetry_bias
        Starboard turn added to the initial guess when an obstacle lies dead ahead, as a
        fraction of the half range of the inputs. `0` disables it.
    """

    max_sqp_iters: int = attr.ib(default=50, converter=int, validator=_positive)
    kkt_tol: float = attr.ib(default=1e-6, converter=float, validator=_positive)
    slack_penalty: float = attr.ib(default=1e4, converter=float, validator=_positive)
    line_search_shrink: float = attr.ib(
        default=0.5, converter=float, validator=_in_unit_interval
    )
    max_line_search: int = attr.ib(default=20, converter=int, validator=_positive)
    regularization: float = attr.ib(default=1e-8, converter=float, validator=_positive)
    max_qp_iters: int = attr.ib(default=500, converter=int, validator=_positive)
    symmetry_bias: float = attr.ib(default=1e-2, converter=float, validator=_non_negative)


@attr.s(frozen=True)
class MpcConfig:
    """
    Horizon, weights and input bounds of the predictive controller.

    Parameters
    ----------
    N
        Horizon length (steps).
    T_s
        Sampling time [s].
    Q, R, Rd, P
        Diagonals of the state-error, input, input-rate and terminal weights. The input rate
        is ``(u_i - u_{i-1}) / T_s``.
    u_lower, u_upper
        Input box.
    solver
        SQP settings.
    """

    N: int = attr.ib(converter=int, validator=_positive)
    T_s: float = attr.ib(converter=float, validator=_positive)
    Q: Tuple[float, ...] = attr.ib(converter=_to_tuple, validator=_non_negative_entries)
    R: Tuple[float, ...] = attr.ib(converter=_to_tuple, validator=_non_negative_entries)
    Rd: Tuple[float, ...] = attr.ib(converter=_to_tuple, validator=_non_negative_entries)
    P: Tuple[float, ...] = attr.ib(converter=_to_tuple, validator=_non_negative_entries)
    u_lower: Tuple[float, ...] = attr.ib(converter=_to_tuple)
    u_upper: Tuple[float, ...] = attr.ib(converter=_to_tuple)
    solver: SolverSettings = attr.ib(
        factory=SolverSettings,
        converter=lambda v: v if isinstance(v, SolverSettings) else SolverSettings(**v),
    )

    def __attrs_post_init__(self):
        if len(self.Q) != len(self.P):
            raise ValueError(
                f"Expected `Q` and `P` to have the same length, "
                f"found `{len(self.Q)}` and `{len(self.P)}`."
            )
        nu = len(self.u_lower)
        for name in ("R", "Rd", "u_upper"):
            if len(getattr(self, name)) != nu:
                raise ValueError(
                    f"Expected `{name}` to have `{nu}` entries, found `{len(getattr(self, name))}`."
                )
        if any(lo > hi for lo, hi in zip(self.u_lower, self.u_upper)):
            raise ValueError(
                f"Expected `u_lower <= u_upper`, found `{self.u_lower}` and `{self.u_upper}`."
            )

    def check_dims(self, nx: int, nu: int) -> None:
        """Raise if the weights do not match a model with ``nx`` states and ``nu`` inputs."""
        if len(self.Q) != nx or len(self.u_lower) != nu:
            raise ValueError(
                f"Expected weights for `{nx}` states and `{nu}` inputs, "
                f"found `{len(self.Q)}` and `{len(self.u_lower)}`."
            )

    def to_dict(self) -> dict:  # noqa: D102
        return attr.asdict(self)


def default_mpc_config(vehicle: Union[str, VehicleKind], r_max: float = 0.3) -> MpcConfig:
    """
    Return the controller settings used for a vehicle kind.

    Parameters
    ----------
    vehicle
        Vehicle kind.
    r_max
        Turn-rate bound of the unicycle, shared with the turning-circle barrier.

    Returns
    -------
    :class:`MpcConfig`
        The settings.
    """
    vehicle = VehicleKind(vehicle)
    if vehicle == VehicleKind.UNICYCLE:
        return MpcConfig(
            N=10,
            T_s=0.1,
            Q=(0, 2, 25, 100),
            R=(50, 50),
            Rd=(5, 5),
            P=(0, 2, 25, 100),
            u_lower=(-r_max, -1.0),
            u_upper=(r_max, 1.0),
        )

    return MpcConfig(
        N=20,
        T_s=0.1,
        Q=(0, 1, 3, 50, 0, 3),
        R=(1e-6, 1e-6),
        Rd=(0.03, 0.03),
        P=(0, 5, 15, 250, 0, 15),
        u_lower=(-10.0, -10.0),
        u_upper=(30.0, 30.0),
    )
