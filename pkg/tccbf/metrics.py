from tccbf._core.metrics import *  # noqa: F401 F403
