from tccbf._core.sim import *  # noqa: F401 F403
