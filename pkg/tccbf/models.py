from tccbf._core.models import *  # noqa: F401 F403
