from .metrics import (
    METRICS_CSV,
    METRICS_JSON,
    MODEL_HEAD_NAME,
    STRATEGIES,
    MetricRow,
    binary_metrics,
    evaluate_all,
    view_head_name,
    write_metrics,
)
from .curves import CURVES_DIR, elbo_curve, training_curves

__all__ = [
    "METRICS_CSV",
    "METRICS_JSON",
    "MODEL_HEAD_NAME",
    "STRATEGIES",
    "MetricRow",
    "binary_metrics",
    "evaluate_all",
    "view_head_name",
    "write_metrics",
    "CURVES_DIR",
    "elbo_curve",
    "training_curves",
]
