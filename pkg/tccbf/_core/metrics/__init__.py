from tccbf._core.metrics._plots import emit_plots, snapshot_times
from tccbf._core.metrics._metrics import (
    Metrics,
    ComparisonTable,
    compare,
    arrival_time,
    compute_metrics,
)
