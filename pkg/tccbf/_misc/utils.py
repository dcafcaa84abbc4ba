from typing import Union

import numpy as np


def wrap_to_pi(angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Wrap ``angle`` to the interval :math:`(-\\pi, \\pi]`."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)

    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def is_finite(*arrays: np.ndarray) -> bool:
    """Return `True` if no array contains `NaN` or `Inf`."""
    return all(np.all(np.isfinite(a)) for a in arrays)
