"""
Re-identification evaluation: Euclidean retrieval, CMC and mAP reports.
"""

from .config import ProtocolConfig
from .retrieval import (
    EmbeddingRecord,
    EvalReport,
    euclidean_rank,
    evaluate,
    query_candidates,
    rank_with_distances,
    ranked_relevance_lists,
    squared_distances,
    write_embeddings_csv,
)
from .performance_monitor import ResourceSample, RunMetrics, RunMonitor, in_phase, monitor_run

__all__ = [
    "ProtocolConfig",
    "EmbeddingRecord",
    "EvalReport",
    "euclidean_rank",
    "evaluate",
    "query_candidates",
    "rank_with_distances",
    "ranked_relevance_lists",
    "squared_distances",
    "write_embeddings_csv",
    "ResourceSample",
    "RunMetrics",
    "RunMonitor",
    "in_phase",
    "monitor_run",
]
