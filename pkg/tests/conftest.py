from copy import deepcopy
from pathlib import Path

import pytest

import numpy as np

from tccbf.constants import BarrierKind, VehicleKind
from tccbf._core.sim._scenario import Scenario
from tccbf._core.cache._cache import MemoryCache
from tccbf._core.mpc._config import default_mpc_config
from tccbf._core.models._asv import AsvModel, load_asv_params
from tccbf._core.utils._options import Options
from tccbf._core.models._unicycle import UnicycleModel
from tccbf._core.barrier._geometry import Obstacle, BarrierConfig


# removes overly verbose logging errors
# see: https://github.com/pytest-dev/pytest/issues/5502#issuecomment-647157873
def pytest_sessionfinish(session, exitstatus):
    import logging

    loggers = [logging.getLogger()] + list(logging.Logger.manager.loggerDict.values())
    for logger in loggers:
        handlers = getattr(logger, "handlers", [])
        for handler in handlers:
            logger.removeHandler(handler)


def pytest_addoption(parser):
    parser.addoption(
        "--closed-loop",
        dest="closed_loop",
        action="store_true",
        help="Whether to also run the full closed-loop scenarios.",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "closed_loop: full closed-loop simulation, enabled by `--closed-loop`"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("closed_loop"):
        return
    skip = pytest.mark.skip(reason="Needs `--closed-loop`.")
    for item in items:
        if "closed_loop" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="function")
def options() -> "Options":
    opt = Options.from_config()
    opt.cache = "memory"
    opt.progress_bar = False
    opt.num_workers = 1
    return opt


@pytest.fixture(scope="function")
def config_backup(tmpdir, monkeypatch):
    monkeypatch.setattr(Options, "config_path", Path(tmpdir) / "tccbf.ini")
    yield


@pytest.fixture(scope="function")
def cache_backup():
    import tccbf

    cache = deepcopy(tccbf.options.cache)
    pb = tccbf.options.progress_bar
    tccbf.options.cache = MemoryCache()
    tccbf.options.progress_bar = False
    yield
    tccbf.options.cache = cache
    tccbf.options.progress_bar = pb


@pytest.fixture(scope="session")
def unicycle() -> UnicycleModel:
    return UnicycleModel()


@pytest.fixture(scope="session")
def asv() -> AsvModel:
    return AsvModel(load_asv_params())


@pytest.fixture(scope="function")
def obstacle() -> Obstacle:
    return Obstacle(15.0, 0.0, 2.0)


@pytest.fixture(scope="function")
def barrier_cfg() -> BarrierConfig:
    return BarrierConfig(
        kind=BarrierKind.TC, alpha=0.5, alpha_e=0.05, alpha_t=0.05, r_max=0.3, R_s=0.5, k=5.0
    )


@pytest.fixture(scope="function")
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(scope="function")
def free_scenario(barrier_cfg: BarrierConfig) -> Scenario:
    """Unicycle already at the reference speed, no obstacles, goal 4 m ahead."""
    return Scenario(
        name="free",
        vehicle=VehicleKind.UNICYCLE,
        x_init=(0.0, 0.0, 0.0, 2.0),
        u_prev=(0.0, 0.0),
        goal_x=4.0,
        u_r=2.0,
        obstacles=(),
        barrier=barrier_cfg,
        mpc=default_mpc_config(VehicleKind.UNICYCLE),
        max_time=5.0,
    )


@pytest.fixture(scope="function")
def short_scenario(free_scenario: Scenario) -> Scenario:
    """Unicycle passing a static obstacle placed just off its path."""
    return free_scenario.with_overrides(
        {
            "name": "short",
            "goal_x": 3.0,
            "max_time": 3.0,
            "obstacles": [{"ox": 6.0, "oy": 3.5, "o_r": 1.0, "vx": 0.0, "vy": 0.0}],
        }
    )
