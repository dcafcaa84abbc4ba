from typing import Sequence

import pytest

import numpy as np

from tccbf.constants import BarrierKind, VehicleKind, SolverStatus
from tccbf._core.mpc import (
    Nlp,
    MpcConfig,
    WarmStart,
    OcpProblem,
    SolverSettings,
    sqp_solve,
    cold_start,
    transcribe,
    kkt_residual,
    evaluate_cost,
    build_reference,
    break_symmetry,
    shift_warm_start,
    default_mpc_config,
)
from tccbf._core.models import rollout
from tccbf._core.barrier import Obstacle, BarrierConfig
from tccbf._core.utils._errors import ConfigError


def _nlp(
    model,
    kind: BarrierKind,
    x_init: Sequence[float],
    obstacles: Sequence[Obstacle] = (),
    u_prev: Sequence[float] = (0.0, 0.0),
    u_r: float = 2.0,
) -> Nlp:
    vehicle = model.kind
    config = default_mpc_config(vehicle)
    cfg = BarrierConfig(kind=kind, alpha=0.5, alpha_e=0.05, alpha_t=0.05, r_max=0.3, R_s=0.5, k=5)
    problem = OcpProblem.from_obstacles(
        model,
        x_init,
        u_prev,
        build_reference(vehicle, u_r, config.N),
        obstacles,
        cfg,
        config.T_s,
    )
    return transcribe(problem, config)


def _random_point(nlp: Nlp, rng) -> np.ndarray:
    N, nx = nlp.N, nlp.nx
    states = np.zeros((N + 1, nx))
    states[:, 0] = np.linspace(0, 4, N + 1) + rng.normal(scale=0.1, size=N + 1)
    states[:, 1] = rng.normal(scale=0.5, size=N + 1)
    states[:, 2] = rng.normal(scale=0.3, size=N + 1)
    states[:, 3] = rng.uniform(1.0, 2.5, size=N + 1)
    if nx == 6:
        states[:, 4] = rng.uniform(0.05, 0.2, size=N + 1) * rng.choice([-1, 1], size=N + 1)
        states[:, 5] = rng.normal(scale=0.1, size=N + 1)
    inputs = rng.normal(scale=0.2, size=(N, nlp.nu))
    slacks = rng.uniform(0, 0.5, size=nlp.n_slacks)

    return nlp.pack(states, inputs, slacks)


def _fd_jacobian(fn, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = step
        cols.append((fn(z + e) - fn(z - e)) / (2 * step))
    return np.column_stack(cols)


class TestConfig:
    def test_defaults(self):
        uni, asv = default_mpc_config("unicycle"), default_mpc_config(VehicleKind.ASV)

        assert (uni.N, uni.T_s) == (10, 0.1)
        assert uni.u_lower == (-0.3, -1.0) and uni.u_upper == (0.3, 1.0)
        assert (asv.N, len(asv.Q), len(asv.R)) == (20, 6, 2)
        uni.check_dims(4, 2)
        asv.check_dims(6, 2)

    def test_r_max_bound(self):
        assert default_mpc_config("unicycle", r_max=0.5).u_upper[0] == 0.5

    def test_check_dims(self):
        with pytest.raises(ValueError, match=r"weights for `6` states"):
            default_mpc_config("unicycle").check_dims(6, 2)

    def test_q_p_length(self):
        with pytest.raises(ValueError, match=r"`Q` and `P` to have the same length"):
            MpcConfig(10, 0.1, (1, 1), (1,), (1,), (1, 1, 1), (-1,), (1,))

    def test_bound_order(self):
        with pytest.raises(ValueError, match=r"u_lower <= u_upper"):
            MpcConfig(10, 0.1, (1,), (1,), (1,), (1,), (1,), (-1,))

    def test_negative_weight(self):
        with pytest.raises(ValueError, match=r"non-negative"):
            MpcConfig(10, 0.1, (-1,), (1,), (1,), (1,), (-1,), (1,))

    @pytest.mark.parametrize(
        "kwargs", [{"max_sqp_iters": 0}, {"line_search_shrink": 1.0}, {"kkt_tol": 0.0}]
    )
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ValueError):
            SolverSettings(**kwargs)

    def test_settings_from_mapping(self):
        config = MpcConfig(10, 0.1, (1,), (1,), (1,), (1,), (-1,), (1,), solver={"kkt_tol": 1e-4})

        assert config.solver.kkt_tol == 1e-4
        assert config.to_dict()["solver"]["kkt_tol"] == 1e-4


class TestReference:
    def test_straight(self):
        ref = build_reference("asv", 0.9, 20)

        assert ref.shape == (21, 6)
        np.testing.assert_array_equal(ref[:, 3], 0.9)
        np.testing.assert_array_equal(np.delete(ref, 3, axis=1), 0)

    def test_unsupported_path(self):
        with pytest.raises(ConfigError, match=r"straight paths"):
            build_reference("unicycle", 2.0, 10, path="circle")

    def test_invalid_horizon(self):
        with pytest.raises(ValueError, match=r"`N` to be positive"):
            build_reference("unicycle", 2.0, 0)


class TestProblem:
    def test_x_init_shape(self, unicycle, barrier_cfg):
        with pytest.raises(ValueError, match=r"`x_init` of shape"):
            OcpProblem(unicycle, np.zeros(3), np.zeros(2), np.zeros((11, 4)), (), barrier_cfg)

    def test_track_length(self, unicycle, barrier_cfg, obstacle):
        with pytest.raises(ValueError, match=r"obstacle track"):
            OcpProblem(
                unicycle, np.zeros(4), np.zeros(2), np.zeros((11, 4)), [(obstacle,)], barrier_cfg
            )

    def test_from_obstacles(self, unicycle, barrier_cfg):
        obs = Obstacle(30, 0, 1, vx=-0.75)
        problem = OcpProblem.from_obstacles(
            unicycle, np.zeros(4), np.zeros(2), np.zeros((11, 4)), [obs], barrier_cfg, 0.1
        )

        assert problem.N == 10
        assert problem.obstacles[0][0] == obs
        assert problem.obstacles[0][10].ox == pytest.approx(29.25)

    def test_horizon_mismatch(self, unicycle, barrier_cfg):
        problem = OcpProblem(unicycle, np.zeros(4), np.zeros(2), np.zeros((6, 4)), (), barrier_cfg)

        with pytest.raises(ValueError, match=r"reference of `11` states"):
            Nlp(problem, default_mpc_config("unicycle"))


class TestTranscription:
    @pytest.mark.parametrize(
        "kind,n_slacks", [(BarrierKind.TC, 10), (BarrierKind.ED, 10), (BarrierKind.DC, 11)]
    )
    def test_dimensions(self, unicycle, obstacle, kind: BarrierKind, n_slacks: int):
        nlp = _nlp(unicycle, kind, (0, 0, 0, 2), [obstacle])

        assert nlp.n_states == 44
        assert nlp.n_inputs == 20
        assert nlp.n_slacks == n_slacks
        assert nlp.n == 64 + n_slacks
        assert nlp.n_eq == 44
        assert nlp.n_in == 40 + 2 * n_slacks

    def test_pack_unpack(self, unicycle, obstacle, rng):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle, Obstacle(20, 5, 1)])
        z = _random_point(nlp, rng)
        X, U, S = nlp.unpack(z)

        assert X.shape == (11, 4) and U.shape == (10, 2) and S.shape == (20,)
        np.testing.assert_array_equal(nlp.pack(X, U, S), z)

    def test_equilibrium_is_feasible(self, unicycle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2))
        start = cold_start(nlp)
        z = nlp.pack(start.states, start.inputs)

        np.testing.assert_allclose(nlp.equalities(z), 0, atol=1e-12)
        assert nlp.violation(z) == pytest.approx(0, abs=1e-12)
        assert evaluate_cost(nlp, z) == pytest.approx(0, abs=1e-12)

    def test_cost_gradient(self, unicycle, obstacle, rng):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle])
        z = _random_point(nlp, rng)
        grad_fd = _fd_jacobian(lambda v: np.array([nlp.cost(v)]), z)[0]

        np.testing.assert_allclose(nlp.cost_gradient(z), grad_fd, rtol=1e-5, atol=1e-4)

    def test_slack_penalty(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle])
        start = cold_start(nlp)
        slacks = np.zeros(nlp.n_slacks)
        slacks[3] = 0.5

        base = nlp.cost(nlp.pack(start.states, start.inputs))
        soft = nlp.cost(nlp.pack(start.states, start.inputs, slacks))

        assert soft - base == pytest.approx(0.5 * nlp.config.solver.slack_penalty)

    @pytest.mark.parametrize("kind", list(BarrierKind))
    @pytest.mark.parametrize("model_name", ["unicycle", "asv"])
    def test_inequality_jacobian(self, model_name: str, kind: BarrierKind, request, rng):
        model = request.getfixturevalue(model_name)
        x_init = np.zeros(model.nx)
        x_init[3] = 1.5
        nlp = _nlp(model, kind, x_init, [Obstacle(6, 1.5, 1, vx=-0.3)], u_prev=np.zeros(2))
        z = _random_point(nlp, rng)

        lin = nlp.linearize(z)

        np.testing.assert_allclose(lin.c_in, nlp.inequalities(z))
        np.testing.assert_allclose(lin.c_eq, nlp.equalities(z))
        np.testing.assert_allclose(lin.A_in, _fd_jacobian(nlp.inequalities, z), atol=1e-5)

    @pytest.mark.parametrize("model_name", ["unicycle", "asv"])
    def test_condensing(self, model_name: str, request, rng):
        model = request.getfixturevalue(model_name)
        x_init = np.zeros(model.nx)
        x_init[3] = 1.5
        nlp = _nlp(model, BarrierKind.TC, x_init, [Obstacle(6, 1.5, 1)], u_prev=np.zeros(2))
        z = _random_point(nlp, rng)
        lin = nlp.linearize(z)

        T, t0 = nlp.condense(lin)
        p = T @ rng.normal(size=T.shape[1]) + t0
        eps = 1e-6
        directional = (nlp.equalities(z + eps * p) - nlp.equalities(z - eps * p)) / (2 * eps)

        np.testing.assert_allclose(directional, -lin.c_eq, atol=1e-5)

    def test_kkt_residual_at_equilibrium(self, unicycle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2))
        start = cold_start(nlp)
        z = nlp.pack(start.states, start.inputs)

        assert kkt_residual(nlp, z, np.zeros(nlp.n_in)) == pytest.approx(0, abs=1e-9)

    def test_kkt_residual_detects_gap(self, unicycle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2))
        start = cold_start(nlp)
        states = start.states.copy()
        states[5, 1] += 0.3

        assert kkt_residual(nlp, nlp.pack(states, start.inputs), np.zeros(nlp.n_in)) >= 0.3


class TestSqp:
    def test_equilibrium(self, unicycle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2))

        result = sqp_solve(nlp)

        assert result.status == SolverStatus.CONVERGED
        assert result.sqp_iterations == 1
        assert result.kkt_residual <= nlp.config.solver.kkt_tol
        np.testing.assert_allclose(result.inputs, 0, atol=1e-9)
        np.testing.assert_allclose(result.first_input, 0, atol=1e-9)
        assert result.max_slack == 0.0
        assert result.N == 10
        assert result.multipliers.shape == (nlp.n_in,)

    def test_far_obstacle_is_inactive(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle])

        result = sqp_solve(nlp)

        assert result.status == SolverStatus.CONVERGED
        np.testing.assert_allclose(result.inputs, 0, atol=1e-6)

    @pytest.mark.parametrize(
        "kind,x0", [(BarrierKind.ED, 6.0), (BarrierKind.TC, 6.0), (BarrierKind.DC, 10.8)]
    )
    def test_active_obstacle(self, unicycle, obstacle, kind: BarrierKind, x0: float):
        nlp = _nlp(unicycle, kind, (x0, 0.5, 0, 2), [obstacle])

        result = sqp_solve(nlp)

        assert result.status != SolverStatus.DEGRADED_FEASIBILITY
        assert result.max_slack <= 1e-6
        assert np.all(nlp.barrier_rows(result.states) >= -1e-6)
        assert np.all(result.inputs >= np.asarray(nlp.config.u_lower) - 1e-9)
        assert np.all(result.inputs <= np.asarray(nlp.config.u_upper) + 1e-9)
        np.testing.assert_allclose(
            result.states, rollout(unicycle, (x0, 0.5, 0, 2), result.inputs, 0.1), atol=1e-12
        )
        # the constraint forces a deviation from straight, constant-speed motion
        assert np.abs(result.inputs).max() > 1e-3

    def test_merit_history(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (6, 0.5, 0, 2), [obstacle])

        result = sqp_solve(nlp)
        history = result.merit_history

        assert len(history)
        for (_, after), (before, _) in zip(history[:-1], history[1:]):
            assert after == before
        assert history[-1][1] < history[0][0]

    def test_cost_of_rollout(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (6, 0.5, 0, 2), [obstacle])

        result = sqp_solve(nlp)
        point = nlp.pack(result.states, result.inputs, result.slacks)

        assert result.cost == pytest.approx(evaluate_cost(nlp, point))
        assert result.max_slack == pytest.approx(result.slacks.max(initial=0.0))

    def test_overlap_is_degraded(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.DC, (15, 0, 0, 2), [obstacle])

        result = sqp_solve(nlp)

        assert result.status == SolverStatus.DEGRADED_FEASIBILITY
        assert result.max_slack >= 2.5 - 1e-9

    def test_iteration_cap(self, unicycle, obstacle):
        config = default_mpc_config("unicycle")
        config = MpcConfig(
            **{**config.to_dict(), "solver": SolverSettings(max_sqp_iters=1, kkt_tol=1e-14)}
        )
        problem = OcpProblem.from_obstacles(
            unicycle,
            (8, 0.5, 0, 2),
            (0, 0),
            build_reference("unicycle", 2.0, 10),
            [obstacle],
            BarrierConfig(),
            0.1,
        )

        result = sqp_solve(transcribe(problem, config))

        assert result.sqp_iterations == 1
        assert result.status in (SolverStatus.MAX_ITERS, SolverStatus.DEGRADED_FEASIBILITY)

    def test_asv_steady(self, asv):
        thrust = asv.steady_thrust(0.9)
        nlp = _nlp(asv, BarrierKind.TC, (0, 0, 0, 0.9, 0, 0), u_prev=thrust, u_r=0.9)
        inputs = np.tile(thrust, (nlp.N, 1))
        warm = WarmStart(rollout(asv, (0, 0, 0, 0.9, 0, 0), inputs, 0.1), inputs)

        result = sqp_solve(nlp, warm)

        assert result.status != SolverStatus.DEGRADED_FEASIBILITY
        assert np.all(np.isfinite(result.states))
        np.testing.assert_allclose(result.first_input, thrust, atol=0.5)
        np.testing.assert_allclose(result.states[:, 3], 0.9, atol=0.05)

    def test_warm_start_shape(self, unicycle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2))

        with pytest.raises(ValueError, match=r"Expected a warm start"):
            sqp_solve(nlp, WarmStart(np.zeros((6, 4)), np.zeros((5, 2))))

    def test_warm_start_lengths(self):
        with pytest.raises(ValueError, match=r"one more state than inputs"):
            WarmStart(np.zeros((5, 4)), np.zeros((5, 2)))

    def test_shift_warm_start(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (8, 0.5, 0, 2), [obstacle])
        result = sqp_solve(nlp)

        shifted = shift_warm_start(result, unicycle, 0.1)

        np.testing.assert_array_equal(shifted.states[:-1], result.states[1:])
        np.testing.assert_array_equal(shifted.inputs[:-1], result.inputs[1:])
        np.testing.assert_array_equal(shifted.inputs[-1], result.inputs[-1])
        assert shifted.states.shape == result.states.shape



def _without_bias(nlp: Nlp) -> Nlp:
    config = nlp.config
    config = MpcConfig(**{**config.to_dict(), "solver": SolverSettings(symmetry_bias=0.0)})
    return transcribe(nlp.problem, config)


class TestSymmetry:
    def test_dead_ahead(self, unicycle, obstacle):
        nlp = _nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle])
        warm = cold_start(nlp)

        biased = break_symmetry(nlp, warm)

        np.testing.assert_allclose(biased.inputs[:, 0], -0.003)
        np.testing.assert_array_equal(biased.inputs[:, 1], 0)
        np.testing.assert_allclose(
            biased.states, rollout(unicycle, (0, 0, 0, 2), biased.inputs, 0.1)
        )
        assert np.all(biased.states[1:, 1] < 0)

    @pytest.mark.parametrize(
        "x_init,obstacles",
        [
            ((0, 0.5, 0, 2), [Obstacle(15, 0, 2)]),
            ((20, 0, 0, 2), [Obstacle(15, 0, 2)]),
            ((0, 0, np.pi / 2, 2), [Obstacle(15, 0, 2)]),
            ((0, 0, 0, 2), []),
        ],
    )
    def test_untouched(self, unicycle, x_init, obstacles):
        nlp = _nlp(unicycle, BarrierKind.TC, x_init, obstacles)
        warm = cold_start(nlp)

        assert break_symmetry(nlp, warm) is warm

    def test_disabled(self, unicycle, obstacle):
        nlp = _without_bias(_nlp(unicycle, BarrierKind.TC, (0, 0, 0, 2), [obstacle]))
        warm = cold_start(nlp)

        assert break_symmetry(nlp, warm) is warm

    def test_invalid_bias(self):
        with pytest.raises(ValueError, match=r"`symmetry_bias` to be non-negative"):
            SolverSettings(symmetry_bias=-1.0)

    def test_asv_starboard(self, asv):
        thrust = asv.steady_thrust(0.9)
        nlp = _nlp(asv, BarrierKind.TC, (0, 0, 0, 0.9, 0, 0), [Obstacle(20, 0, 4)], u_prev=thrust)
        inputs = np.tile(thrust, (nlp.N, 1))
        warm = WarmStart(rollout(asv, (0, 0, 0, 0.9, 0, 0), inputs, 0.1), inputs)

        biased = break_symmetry(nlp, warm)

        np.testing.assert_allclose(biased.inputs - inputs, np.tile([0.2, -0.2], (nlp.N, 1)))
        assert biased.states[-1, 2] < 0

    @pytest.mark.parametrize("kind", [BarrierKind.ED, BarrierKind.TC])
    def test_leaves_the_axis(self, unicycle, obstacle, kind: BarrierKind):
        nlp = _nlp(unicycle, kind, (6, 0, 0, 2), [obstacle])

        symmetric = sqp_solve(_without_bias(nlp))
        result = sqp_solve(nlp)

        np.testing.assert_array_equal(symmetric.states[:, 1], 0)
        assert np.any(result.states[:, 1] != 0)
        assert result.max_slack <= 1e-6
        assert np.all(nlp.barrier_rows(result.states) >= -1e-6)
