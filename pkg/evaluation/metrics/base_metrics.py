"""
Base metric interfaces and common utilities for retrieval metrics.

A metric scores one query: ``expected`` is the relevance flag of every
gallery item in gallery order, ``actual`` is the ranking the system
produced (a permutation of gallery indices, best match first).
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class MetricResult(BaseModel):
    """
    Result of a metric calculation.

    Contains the metric score, confidence interval, and additional metadata.
    """

    model_config = ConfigDict(
        str_strip_whitespace=True,
        validate_assignment=True,
        extra='forbid'
    )

    name: str = Field(
        ...,
        description="Name of the metric",
        min_length=1,
        max_length=100
    )
    score: float = Field(
        ...,
        description="Calculated metric score",
        ge=0.0,
        le=1.0
    )
    confidence_interval: Optional[tuple[float, float]] = Field(
        default=None,
        description="95% confidence interval for the score (lower_bound, upper_bound)"
    )
    metadata: Dict[str, Any] = Field(
        default_factory=dict,
        description="Additional metadata about the metric calculation"
    )


class BaseMetric(ABC):
    """
    Abstract base class for all retrieval metrics.
    """

    def __init__(self, name: str, description: str = ""):
        """
        Initialize the metric.

        Args:
            name: Name of the metric
            description: Description of what the metric measures
        """
        self.name = name
        self.description = description

    @abstractmethod
    def calculate(self, expected: Any, actual: Any, **kwargs) -> MetricResult:
        """
        Calculate the metric score for one query.

        Args:
            expected: Relevance flag per gallery item, in gallery order
            actual: Ranking of gallery indices, best match first
            **kwargs: Additional parameters specific to the metric

        Returns:
            MetricResult containing the score and metadata
        """

    def calculate_batch(self, expected_list: List[Any], actual_list: List[Any], **kwargs) -> List[MetricResult]:
        """
        Calculate metric scores for a batch of queries.

        Raises:
            ValueError: If the lists differ in length
        """
        if len(expected_list) != len(actual_list):
            raise ValueError("Expected and actual lists must have the same length")

        return [self.calculate(expected, actual, **kwargs) for expected, actual in zip(expected_list, actual_list)]

    def aggregate_results(self, results: List[MetricResult]) -> MetricResult:
        """
        Aggregate multiple metric results (e.g. one per seed) into a single result.

        The score is the mean; metadata carries std, median, min and max.

        Args:
            results: List of MetricResult objects to aggregate

        Returns:
            Aggregated MetricResult
        """
        if not results:
            return MetricResult(
                name=f"{self.name}_aggregated",
                score=0.0,
                metadata={"count": 0}
            )

        scores = [r.score for r in results]
        n = len(scores)
        mean_score = float(np.clip(np.mean(scores), 0.0, 1.0))

        return MetricResult(
            name=f"{self.name}_aggregated",
            score=mean_score,
            confidence_interval=calculate_confidence_interval(scores) if n > 1 else None,
            metadata={
                "count": n,
                "std": float(np.std(scores)),
                "median": float(np.median(scores)),
                "min": min(scores),
                "max": max(scores),
            }
        )


class RankingMetric(BaseMetric):
    """
    Base class for metrics over a ranked gallery.

    Subclasses score a relevance vector already in ranking order;
    ``calculate`` reorders gallery-order flags by the ranking first.
    """

    @abstractmethod
    def score_ranked(self, ranked: np.ndarray) -> MetricResult:
        """Score one query from its relevance flags in ranking order."""

    def calculate(self, expected: Any, actual: Any, **kwargs) -> MetricResult:
        return self.score_ranked(self.ranked_relevance(expected, actual))

    def ranked_relevance(self, expected: Sequence[bool], actual: Sequence[int]) -> np.ndarray:
        """
        Relevance flags in ranking order.

        Raises:
            ValueError: If the ranking is not a permutation of the gallery
        """
        relevant = np.asarray(expected, dtype=bool)
        ranking = np.asarray(actual, dtype=np.int64)
        if ranking.shape != relevant.shape or not np.array_equal(np.sort(ranking), np.arange(len(relevant))):
            raise ValueError("ranking must be a permutation of the gallery indices")
        return relevant[ranking]


def calculate_confidence_interval(scores: List[float], confidence_level: float = 0.95) -> tuple[float, float]:
    """
    Normal-approximation confidence interval of the mean.

    Args:
        scores: List of numerical scores
        confidence_level: 0.90, 0.95 or 0.99

    Returns:
        Tuple of (lower_bound, upper_bound)
    """
    if len(scores) < 2:
        return (0.0, 0.0)

    mean_score = float(np.mean(scores))
    std_score = float(np.std(scores, ddof=1))

    z_score = 1.96
    if confidence_level == 0.99:
        z_score = 2.576
    elif confidence_level == 0.90:
        z_score = 1.645

    margin_of_error = z_score * (std_score / np.sqrt(len(scores)))
    return (mean_score - margin_of_error, mean_score + margin_of_error)


def safe_divide(numerator: float, denominator: float, default: float = 0.0) -> float:
    """
    Divide, returning ``default`` when the denominator is zero.
    """
    if denominator == 0:
        return default
    return numerator / denominator
