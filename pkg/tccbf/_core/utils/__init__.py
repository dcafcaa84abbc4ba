from tccbf._core.utils._errors import (
    ConfigError,
    QpInfeasibleError,
    UnknownScenarioError,
    NumericalFailureError,
)
from tccbf._core.utils._options import options
