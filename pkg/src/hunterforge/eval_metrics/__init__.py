from hunterforge.eval_metrics.metrics import (
    EvalConfig,
    ThresholdStats,
    circle_nms,
    match_frame,
    average_precision,
    RECALL_POINTS,
)
from hunterforge.eval_metrics.report import MetricsReport
from hunterforge.eval_metrics.evaluate import evaluate
