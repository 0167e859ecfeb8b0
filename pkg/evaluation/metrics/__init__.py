"""
Retrieval metrics for re-identification: CMC rank-k accuracy and mAP.
"""

from .base_metrics import (
    BaseMetric,
    MetricResult,
    RankingMetric,
    calculate_confidence_interval,
    safe_divide,
)
from .reid_metrics import (
    AveragePrecisionMetric,
    RankAccuracyMetric,
    ReidMetrics,
    average_precision,
    cmc_curve,
    first_hit_rank,
    mean_ap,
)

__all__ = [
    "BaseMetric",
    "MetricResult",
    "RankingMetric",
    "calculate_confidence_interval",
    "safe_divide",
    "AveragePrecisionMetric",
    "RankAccuracyMetric",
    "ReidMetrics",
    "average_precision",
    "cmc_curve",
    "first_hit_rank",
    "mean_ap",
]
