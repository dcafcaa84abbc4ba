from tccbf._core.mpc import *  # noqa: F401 F403
