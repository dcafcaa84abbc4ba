from tccbf._core.barrier import *  # noqa: F401 F403
