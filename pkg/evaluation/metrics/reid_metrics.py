"""
Re-identification metrics: CMC rank-k accuracy and average precision.

Both work on ranked relevance vectors, i.e. the relevance flag of each
gallery item listed in ranking order. Queries without any relevant item
are not scored; callers skip and count them.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from .base_metrics import MetricResult, RankingMetric, safe_divide

logger = logging.getLogger(__name__)


def first_hit_rank(ranked: Sequence[bool]) -> Optional[int]:
    """1-based rank of the first relevant item, or None when nothing is relevant."""
    hits = np.flatnonzero(np.asarray(ranked, dtype=bool))
    return int(hits[0]) + 1 if hits.size else None


def average_precision(ranked: Sequence[bool]) -> float:
    """
    Mean over relevant positions p of (relevant items in the top p) / p.

    Returns 0.0 when nothing is relevant.
    """
    positions = np.flatnonzero(np.asarray(ranked, dtype=bool)) + 1
    if positions.size == 0:
        return 0.0
    precisions = [(i + 1) / int(p) for i, p in enumerate(positions)]
    return math.fsum(precisions) / len(precisions)


def cmc_curve(ranked_relevance: Sequence[Sequence[bool]], k_max: int) -> np.ndarray:
    """
    Rank-k accuracy for k = 1..k_max over queries with at least one relevant item.

    ``k_max`` larger than the longest ranked list is clamped with a warning.

    Args:
        ranked_relevance: One ranked relevance vector per query
        k_max: Length of the curve

    Returns:
        Non-decreasing vector; all zeros when no query is evaluable
    """
    longest = max((len(r) for r in ranked_relevance), default=0)
    if k_max > longest:
        logger.warning(f"K_max {k_max} exceeds the gallery size {longest}; clamping")
        k_max = longest
    first_hits = [first_hit_rank(r) for r in ranked_relevance]
    first_hits = [h for h in first_hits if h is not None]
    if k_max <= 0:
        return np.zeros(0)
    counts = np.zeros(k_max, dtype=np.int64)
    for hit in first_hits:
        if hit <= k_max:
            counts[hit - 1:] += 1
    if not first_hits:
        return np.zeros(k_max)
    return counts / len(first_hits)


def mean_ap(ranked_relevance: Sequence[Sequence[bool]]) -> float:
    """Mean average precision over queries with at least one relevant item."""
    scores = [average_precision(r) for r in ranked_relevance if first_hit_rank(r) is not None]
    return safe_divide(math.fsum(scores), len(scores))


class RankAccuracyMetric(RankingMetric):
    """
    Rank-k accuracy of one query: 1 when a relevant item appears in the top k.
    """

    def __init__(self, k: int = 1):
        if k < 1:
            raise ValueError("k must be positive")
        super().__init__(
            name=f"rank{k}",
            description=f"First relevant gallery item within the top {k}"
        )
        self.k = k

    def score_ranked(self, ranked: np.ndarray) -> MetricResult:
        hit = first_hit_rank(ranked)
        return MetricResult(
            name=self.name,
            score=1.0 if hit is not None and hit <= self.k else 0.0,
            metadata={"first_hit_rank": hit, "gallery_size": len(ranked)}
        )


class AveragePrecisionMetric(RankingMetric):
    """
    Average precision of one query over its full ranking.
    """

    def __init__(self):
        super().__init__(
            name="AveragePrecision",
            description="Mean precision at every relevant position of the ranking"
        )

    def score_ranked(self, ranked: np.ndarray) -> MetricResult:
        return MetricResult(
            name=self.name,
            score=float(np.clip(average_precision(ranked), 0.0, 1.0)),
            metadata={"num_relevant": int(np.count_nonzero(ranked)), "gallery_size": len(ranked)}
        )


class ReidMetrics:
    """
    Rank-k accuracies and average precision for a batch of queries.

    ``evaluate`` and ``evaluate_ranked`` average per-query scores within one
    run; ``aggregate`` combines the results of several runs, e.g. one per seed.
    """

    def __init__(self, ranks: Sequence[int] = (1, 5, 10, 20)):
        self.rank_metrics = [RankAccuracyMetric(k) for k in ranks]
        self.ap_metric = AveragePrecisionMetric()

    @property
    def metrics(self) -> List[RankingMetric]:
        return [*self.rank_metrics, self.ap_metric]

    def evaluate(self, relevance: List[Sequence[bool]], rankings: List[Sequence[int]]) -> Dict[str, MetricResult]:
        """
        Score every query from gallery-order relevance and a ranking.

        Queries with no relevant item are dropped before averaging.
        """
        if len(relevance) != len(rankings):
            raise ValueError("Expected and actual lists must have the same length")
        ranked = [self.ap_metric.ranked_relevance(e, a) for e, a in zip(relevance, rankings)]
        return self.evaluate_ranked(ranked, total_queries=len(relevance))

    def evaluate_ranked(self, ranked_lists: Sequence[Sequence[bool]],
                        total_queries: Optional[int] = None) -> Dict[str, MetricResult]:
        """
        Score relevance vectors that are already in ranking order.

        Args:
            ranked_lists: One ranked relevance vector per query
            total_queries: Queries before skipping; defaults to ``len(ranked_lists)``

        Returns:
            Mean score per metric name, with the query counts in metadata
        """
        kept = [np.asarray(r, dtype=bool) for r in ranked_lists if np.any(r)]
        total = len(ranked_lists) if total_queries is None else total_queries
        results: Dict[str, MetricResult] = {}
        for metric in self.metrics:
            scores = [metric.score_ranked(r).score for r in kept]
            results[metric.name] = MetricResult(
                name=metric.name,
                score=safe_divide(math.fsum(scores), len(scores)),
                metadata={"num_queries": len(kept), "skipped_queries": total - len(kept)}
            )
        return results

    def aggregate(self, runs: Sequence[Dict[str, MetricResult]]) -> Dict[str, MetricResult]:
        """
        Combine per-run results metric by metric.

        Each entry's score is the mean over runs; metadata carries the median,
        std, min and max.
        """
        return {
            metric.name: metric.aggregate_results([run[metric.name] for run in runs if metric.name in run])
            for metric in self.metrics
        }
