import json

import pytest

import numpy as np
import pandas as pd

from tccbf.constants import RunStatus, BarrierKind, VehicleKind, ScenarioName
from tccbf._core.sim import (
    Scenario,
    Simulator,
    SweepPoint,
    TrajectoryLog,
    log_columns,
    get_scenario,
    run_scenario,
    sweep_preset,
    load_scenario,
    builtin_scenarios,
    propagate_obstacles,
    run_parameter_sweep,
)
from tccbf._core.barrier import Obstacle
from tccbf._core.sim._log import barrier_snapshot
from tccbf._core.metrics import compute_metrics
from tccbf._core.models._unicycle import UnicycleModel
from tccbf._core.utils._errors import ConfigError, UnknownScenarioError


class TestScenario:
    def test_x_init_size(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"`x_init` to have `4` entries"):
            free_scenario.with_overrides({"x_init": [0, 0, 0]})

    def test_u_prev_size(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"`u_prev` to have `2` entries"):
            free_scenario.with_overrides({"u_prev": [0]})

    def test_goal_behind(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"`goal_x` to lie beyond"):
            free_scenario.with_overrides({"goal_x": -1.0})

    def test_weights_for_other_vehicle(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"weights for `6` states"):
            free_scenario.with_overrides({"vehicle": "asv", "x_init": [0] * 6})

    def test_invalid_max_time(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"`max_time` to be positive"):
            free_scenario.with_overrides({"max_time": 0.0})

    def test_unknown_override(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"Unknown scenario field `barrier.foo`"):
            free_scenario.with_overrides({"barrier": {"foo": 1}})

    def test_nested_override(self, free_scenario: Scenario):
        scenario = free_scenario.with_overrides({"barrier": {"alpha_t": 0.07}, "mpc": {"N": 5}})

        assert scenario.barrier.alpha_t == 0.07
        assert scenario.barrier.kind == free_scenario.barrier.kind
        assert scenario.mpc.N == 5
        assert scenario.mpc.Q == free_scenario.mpc.Q

    def test_with_barrier(self, free_scenario: Scenario):
        scenario = free_scenario.with_barrier("ed")

        assert scenario.barrier.kind == BarrierKind.ED
        assert scenario.barrier.alpha == free_scenario.barrier.alpha

    def test_dict_roundtrip(self, short_scenario: Scenario):
        data = json.loads(json.dumps(short_scenario.to_dict()))

        assert Scenario.from_dict(data) == short_scenario

    def test_from_dict_missing(self, free_scenario: Scenario):
        data = free_scenario.to_dict()
        del data["u_r"]

        with pytest.raises(ConfigError, match=r"Missing scenario fields: `\['u_r'\]`"):
            Scenario.from_dict(data)

    def test_from_dict_unknown(self, free_scenario: Scenario):
        with pytest.raises(ConfigError, match=r"Unknown scenario fields"):
            Scenario.from_dict({**free_scenario.to_dict(), "foo": 1})

    def test_model(self, free_scenario: Scenario):
        assert free_scenario.model().nx == 4
        assert get_scenario("asv-static").model().nx == 6
        assert free_scenario.T_s == 0.1


class TestCatalog:
    def test_all_names(self):
        catalog = builtin_scenarios()

        assert set(catalog) == {s.value for s in ScenarioName}
        for name, scenario in catalog.items():
            assert scenario.name == name
            assert len(scenario.obstacles) == 1
            assert scenario.barrier.kind == BarrierKind.TC

    @pytest.mark.parametrize(
        "name,vehicle,vx",
        [
            ("unicycle-static", VehicleKind.UNICYCLE, 0.0),
            ("unicycle-headon", VehicleKind.UNICYCLE, -0.75),
            ("unicycle-overtaking", VehicleKind.UNICYCLE, 0.5),
            ("asv-static", VehicleKind.ASV, 0.0),
            ("asv-headon", VehicleKind.ASV, -0.3),
            ("asv-overtaking", VehicleKind.ASV, 0.3),
        ],
    )
    def test_get_scenario(self, name: str, vehicle: VehicleKind, vx: float):
        scenario = get_scenario(name)

        assert scenario.vehicle == vehicle
        assert scenario.obstacles[0].vx == vx

    def test_unicycle_static(self):
        scenario = get_scenario(ScenarioName.UNICYCLE_STATIC)

        assert scenario.x_init == (0.0, 0.0, 0.0, 2.0)
        assert scenario.obstacles[0] == Obstacle(15, 0, 2)
        assert scenario.u_r == 2.0

    def test_asv_starts_in_steady_state(self):
        scenario = get_scenario("asv-static")
        out = scenario.model().deriv(scenario.x_init, scenario.u_prev)

        np.testing.assert_allclose(out[3:], 0, atol=1e-12)

    def test_unknown(self):
        with pytest.raises(UnknownScenarioError, match=r"unknown scenario `foo`"):
            get_scenario("foo")


class TestLoadScenario:
    def test_full(self, tmpdir, short_scenario: Scenario):
        path = tmpdir / "scenario.json"
        path.write_text(json.dumps(short_scenario.to_dict()), encoding="utf-8")

        assert load_scenario(str(path)) == short_scenario

    def test_base_with_overrides(self, tmpdir):
        path = tmpdir / "scenario.json"
        path.write_text(
            json.dumps({"base": "unicycle-headon", "barrier": {"kind": "ed"}, "max_time": 10}),
            encoding="utf-8",
        )
        scenario = load_scenario(path)

        assert scenario.barrier.kind == BarrierKind.ED
        assert scenario.max_time == 10.0
        assert scenario.obstacles == get_scenario("unicycle-headon").obstacles

    def test_unknown_base(self, tmpdir):
        path = tmpdir / "scenario.json"
        path.write_text(json.dumps({"base": "foo"}), encoding="utf-8")

        with pytest.raises(UnknownScenarioError):
            load_scenario(path)

    def test_sidecar(self, tmpdir, short_scenario: Scenario):
        path = tmpdir / "run.json"
        path.write_text(
            json.dumps({"scenario": short_scenario.to_dict(), "status": "arrived"}),
            encoding="utf-8",
        )

        assert load_scenario(path) == short_scenario

    def test_invalid_json(self, tmpdir):
        path = tmpdir / "scenario.json"
        path.write_text("{not json", encoding="utf-8")

        with pytest.raises(ConfigError, match=r"Unable to read scenario file"):
            load_scenario(path)

    def test_missing_file(self, tmpdir):
        with pytest.raises(ConfigError, match=r"Unable to read scenario file"):
            load_scenario(tmpdir / "missing.json")

    def test_not_an_object(self, tmpdir):
        path = tmpdir / "scenario.json"
        path.write_text("[1, 2]", encoding="utf-8")

        with pytest.raises(ConfigError, match=r"Expected a JSON object"):
            load_scenario(path)


class TestPropagate:
    def test_constant_velocity(self):
        obstacles = (Obstacle(30, 0, 1, vx=-0.75), Obstacle(8, 1, 4, vx=0.3, vy=-0.1))
        moved = propagate_obstacles(obstacles, 10.0)

        assert moved[0].ox == pytest.approx(22.5)
        assert (moved[1].ox, moved[1].oy) == pytest.approx((11.0, 0.0))
        assert moved[1].o_r == 4
        assert (moved[1].vx, moved[1].vy) == (0.3, -0.1)

    def test_zero_time(self, obstacle: Obstacle):
        assert propagate_obstacles([obstacle], 0.0) == (obstacle,)

    def test_negative_time(self, obstacle: Obstacle):
        with pytest.raises(ValueError, match=r"`t` to be non-negative"):
            propagate_obstacles([obstacle], -0.1)


class TestTrajectoryLog:
    def test_columns(self):
        unicycle, asv = log_columns("unicycle"), log_columns("asv")

        assert unicycle[:7] == ["t", "x", "y", "psi", "u", "in_r", "in_a"]
        assert asv[:9] == ["t", "x", "y", "psi", "u", "v", "r", "F_l", "F_r"]
        assert unicycle[-1] == "solve_time"
        assert "h_tc" in asv and "closest_distance" in asv

    def test_from_rows_fills_nan(self, free_scenario: Scenario):
        log = TrajectoryLog.from_rows(free_scenario, [{"t": 0.0, "x": 1.0}], "timeout")

        assert list(log.records.columns) == log_columns("unicycle")
        assert np.isnan(log.records["in_a"].iloc[0])
        assert log.records["solver_status"].iloc[0] == ""
        assert log.states.shape == (1, 4)
        assert log.inputs.shape == (1, 2)
        assert not log.reached

    def test_str(self, free_scenario: Scenario):
        log = TrajectoryLog.from_rows(free_scenario, [], RunStatus.ARRIVED)

        assert str(log) == (
            "<TrajectoryLog[scenario='free', barrier='tc', status='arrived', steps=0]>"
        )
        assert repr(log) == str(log)

    def test_invalid_status(self, free_scenario: Scenario):
        with pytest.raises(ValueError, match=r"Invalid value `foo`"):
            TrajectoryLog.from_rows(free_scenario, [], "foo")

    def test_snapshot_reversing_inside_obstacle(self, free_scenario: Scenario):
        out = barrier_snapshot(
            UnicycleModel(), np.array([-0.5, 0.0, 0.0, -1.0]), [Obstacle(0, 0, 1)], free_scenario
        )

        assert out["speed"] == -1.0
        assert out["closest_distance"] == pytest.approx(-0.5)
        assert out["h_dc"] == pytest.approx(-1.0)
        assert out["h_tc"] < 0


class TestRunScenario:
    def test_free_arrives(self, free_scenario: Scenario, options):
        log = run_scenario(free_scenario, opts=options)
        last = log.records.iloc[-1]

        assert log.status == RunStatus.ARRIVED
        assert log.reached
        assert log.error is None
        assert last["x"] >= 4.0
        assert last["t"] == pytest.approx(2.0, abs=0.11)
        assert np.isnan(last["in_r"]) and np.isnan(last["in_a"])
        np.testing.assert_allclose(log.inputs[:-1], 0, atol=1e-9)
        np.testing.assert_allclose(log.records["y"], 0, atol=1e-9)
        np.testing.assert_allclose(np.diff(log.time), 0.1)
        assert set(log.records["solver_status"].iloc[:-1]) == {"converged"}
        assert log.records["h_tc"].isna().all()
        assert len(log.merit_histories) == len(log) - 1

    def test_free_forty_meters(self, free_scenario: Scenario, options):
        scenario = free_scenario.with_overrides({"goal_x": 40.0, "max_time": 25.0})
        log = run_scenario(scenario, opts=options)

        assert log.status == RunStatus.ARRIVED
        assert compute_metrics(log).t_a == pytest.approx(20.0, abs=1e-6)
        assert np.abs(log.records["y"]).max() <= 1e-3

    def test_timeout(self, free_scenario: Scenario, options):
        scenario = free_scenario.with_overrides({"goal_x": 100.0, "max_time": 0.5})
        log = run_scenario(scenario, opts=options)

        assert log.status == RunStatus.TIMEOUT
        assert len(log) == 6
        assert log.time[-1] == pytest.approx(0.5)
        assert np.isnan(log.inputs[-1]).all()

    def test_barrier_columns(self, short_scenario: Scenario, options):
        log = run_scenario(short_scenario, opts=options)
        first = log.records.iloc[0]

        assert log.status == RunStatus.ARRIVED
        assert first["closest_distance"] == pytest.approx(np.hypot(6, 3.5) - 1)
        assert first["h_dc"] == pytest.approx(np.hypot(6, 3.5) - 1.5)
        assert first["speed"] == 2.0
        assert np.isfinite(first["h_ed"]) and np.isfinite(first["h_tc"])

    def test_cached(self, free_scenario: Scenario, options, monkeypatch):
        first = run_scenario(free_scenario, opts=options)
        assert len(options.cache) == 1

        def fail(*_args, **_kwargs):
            raise AssertionError("Simulated although the run is cached.")

        monkeypatch.setattr(Simulator, "_simulate", fail)
        second = run_scenario(free_scenario, opts=options)

        pd.testing.assert_frame_equal(first.records, second.records)
        with pytest.raises(AssertionError, match=r"Simulated although"):
            run_scenario(free_scenario, opts=options, cache=False)

    def test_global_options(self, free_scenario: Scenario, cache_backup):
        import tccbf

        run_scenario(free_scenario)

        assert len(tccbf.options.cache) == 1

    def test_invalid_options(self):
        with pytest.raises(TypeError, match=r"`opts` to be of type `Options`"):
            Simulator({"cache": None})

    def test_write(self, tmpdir, free_scenario: Scenario, options):
        log = run_scenario(free_scenario, opts=options)
        csv, sidecar = log.write(tmpdir / "out")

        assert csv.name == "free_tc.csv"
        assert sidecar.name == "free_tc.json"
        frame = pd.read_csv(csv)
        assert "solve_time" not in frame.columns
        assert len(frame) == len(log)
        np.testing.assert_allclose(frame["x"], log.records["x"], rtol=1e-9)

        with open(sidecar) as fin:
            data = json.load(fin)
        assert data["status"] == "arrived"
        assert data["metadata"]["steps"] == len(log)
        assert data["metadata"]["columns"] == list(frame.columns)
        assert load_scenario(sidecar) == free_scenario

    def test_write_stem(self, tmpdir, free_scenario: Scenario):
        log = TrajectoryLog.from_rows(free_scenario, [{"t": 0.0}], RunStatus.TIMEOUT)
        csv, sidecar = log.write(tmpdir, stem="foo")

        assert (csv.name, sidecar.name) == ("foo.csv", "foo.json")


class TestSweep:
    def test_presets(self):
        assert sweep_preset("unicycle", "tc") == {"alpha_t": (0.03, 0.05, 0.07)}
        assert set(sweep_preset("unicycle", "ed")) == {"alpha", "alpha_e"}
        assert sweep_preset("asv", "ed") == {"alpha_e": (0.01, 0.015, 0.02)}
        assert sweep_preset("asv", "tc") == {"alpha_t": (0.01, 0.015, 0.02)}

    def test_preset_distance(self):
        with pytest.raises(ConfigError, match=r"no parameters to sweep"):
            sweep_preset("unicycle", "dc")

    @pytest.mark.parametrize("grid", [{}, {"alpha_t": ()}])
    def test_empty_grid(self, free_scenario: Scenario, grid, options):
        with pytest.raises(ConfigError, match=r"empty parameter grid"):
            run_parameter_sweep(free_scenario, grid, opts=options)

    def test_product_order(self, free_scenario: Scenario, options):
        points = run_parameter_sweep(
            free_scenario, {"alpha_t": (0.03, 0.05), "mpc.N": (5, 10)}, opts=options
        )

        assert [p.parameters for p in points] == [
            {"alpha_t": 0.03, "mpc.N": 5},
            {"alpha_t": 0.03, "mpc.N": 10},
            {"alpha_t": 0.05, "mpc.N": 5},
            {"alpha_t": 0.05, "mpc.N": 10},
        ]
        assert all(p.ok for p in points)
        assert points[0].log.scenario.barrier.alpha_t == 0.03
        assert points[0].log.scenario.mpc.N == 5
        assert all(p.log.status == RunStatus.ARRIVED for p in points)

    def test_failing_point(self, free_scenario: Scenario, options):
        points = run_parameter_sweep(free_scenario, {"alpha_t": (0.05, 2.0)}, opts=options)

        assert points[0].ok and points[0].error is None
        assert not points[1].ok
        assert points[1].error.startswith("ConfigError")

    def test_threads(self, free_scenario: Scenario, options):
        options.num_workers = 2
        points = run_parameter_sweep(free_scenario, {"alpha_t": (0.03, 0.05, 0.07)}, opts=options)

        assert [p.parameters["alpha_t"] for p in points] == [0.03, 0.05, 0.07]
        assert all(isinstance(p, SweepPoint) and p.ok for p in points)
