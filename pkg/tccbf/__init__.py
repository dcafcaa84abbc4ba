from tccbf._core.cache import clear_cache
from tccbf._core.utils import options  # from_first in isort is important here
import tccbf.mpc as mpc
import tccbf.sim as sim
import tccbf.models as models
import tccbf.barrier as barrier
import tccbf.metrics as metrics
import tccbf.constants as constants

__author__ = "tccbf developers"
__maintainer__ = "tccbf developers"
__version__ = "0.1.0"

try:
    from importlib_metadata import PackageNotFoundError, version  # Python < 3.8
except ImportError:
    from importlib.metadata import PackageNotFoundError, version  # Python >= 3.8

from packaging.version import parse

try:
    __full_version__ = parse(version(__name__))
    __full_version__ = (
        f"{__version__}+{__full_version__.local}" if __full_version__.local else __version__
    )
except PackageNotFoundError:
    __full_version__ = __version__

del parse, version, PackageNotFoundError
