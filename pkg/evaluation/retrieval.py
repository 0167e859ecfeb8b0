"""
Query/gallery retrieval by Euclidean distance and report assembly.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shared.exceptions import DegenerateDatasetError, ShapeMismatchError

from .config import ProtocolConfig
from .metrics.base_metrics import MetricResult
from .metrics.reid_metrics import ReidMetrics, cmc_curve, mean_ap

logger = logging.getLogger(__name__)


class EmbeddingRecord(BaseModel):
    """Fixed-length embedding of one sequence with its labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra='forbid')

    person_id: int = Field(..., ge=0, description="Identity label")
    camera_id: int = Field(..., ge=0, description="Camera label")
    vector: np.ndarray = Field(..., description="Embedding vector")

    @field_validator('vector')
    @classmethod
    def validate_vector(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f'vector must be a non-empty 1-D array, got shape {arr.shape}')
        return arr


class EvalReport(BaseModel):
    """CMC curve and mAP over the evaluated queries."""

    model_config = ConfigDict(extra='forbid')

    cmc: List[float] = Field(default_factory=list, description="Rank-k accuracy for k = 1..K_max")
    mean_ap: float = Field(default=0.0, ge=0.0, le=1.0, description="Mean average precision")
    num_queries: int = Field(default=0, ge=0, description="Queries with at least one relevant gallery item")
    skipped_queries: int = Field(default=0, ge=0, description="Queries without a relevant gallery item")
    post_processing: str = Field(default="none", description="Re-ranking applied after retrieval")
    metrics: Dict[str, MetricResult] = Field(default_factory=dict, description="Per-metric mean scores with query counts")

    @model_validator(mode='after')
    def validate_cmc(self) -> 'EvalReport':
        if any(b < a for a, b in zip(self.cmc, self.cmc[1:])):
            raise ValueError('cmc must be non-decreasing')
        if any(not 0.0 <= v <= 1.0 for v in self.cmc):
            raise ValueError('cmc values must lie in [0, 1]')
        return self

    def rank(self, k: int) -> float:
        """Rank-k accuracy; k beyond the curve reads its last value."""
        if not self.cmc:
            return 0.0
        return self.cmc[min(k, len(self.cmc)) - 1]

    def summary(self, ranks: Sequence[int] = (1, 5, 10, 20)) -> Dict[str, Any]:
        """Flat JSON-ready dictionary in report-table column order."""
        data: Dict[str, Any] = {f"rank{k}": self.rank(k) for k in ranks}
        data["mAP"] = self.mean_ap
        data["num_queries"] = self.num_queries
        data["skipped_queries"] = self.skipped_queries
        data["post_processing"] = self.post_processing
        data["cmc"] = list(self.cmc)
        return data

    def save_json(self, path: Union[str, Path], ranks: Sequence[int] = (1, 5, 10, 20)) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(ranks), indent=2))
        return path


def _gallery_matrix(gallery: Sequence[EmbeddingRecord]) -> np.ndarray:
    if not gallery:
        raise DegenerateDatasetError("gallery is empty", num_items=0)
    dim = gallery[0].vector.size
    for record in gallery:
        if record.vector.size != dim:
            raise ShapeMismatchError("gallery vectors differ in length", expected=dim,
                                     actual=record.vector.size, operation="euclidean_rank")
    return np.stack([record.vector for record in gallery])


def squared_distances(query: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from ``query`` to each gallery row, by direct differences."""
    if gallery.shape[1] != query.size:
        raise ShapeMismatchError("query and gallery dimensions differ", expected=gallery.shape[1],
                                 actual=query.size, operation="euclidean_rank")
    diff = gallery - query[None, :]
    return np.einsum("ij,ij->i", diff, diff)


def euclidean_rank(query: EmbeddingRecord, gallery: Sequence[EmbeddingRecord]) -> np.ndarray:
    """
    Gallery indices by ascending distance to the query, ties by ascending index.

    Raises:
        DegenerateDatasetError: Empty gallery
        ShapeMismatchError: Inconsistent vector lengths
    """
    matrix = _gallery_matrix(gallery)
    return np.argsort(squared_distances(query.vector, matrix), kind="stable")


def rank_with_distances(query: EmbeddingRecord,
                        gallery: Sequence[EmbeddingRecord]) -> Tuple[np.ndarray, np.ndarray]:
    """Ranking plus the true (not squared) distances in ranking order."""
    matrix = _gallery_matrix(gallery)
    squared = squared_distances(query.vector, matrix)
    order = np.argsort(squared, kind="stable")
    return order, np.sqrt(squared[order])


def query_candidates(query: EmbeddingRecord, gallery: Sequence[EmbeddingRecord],
                     cross_camera_only: bool) -> List[int]:
    """Gallery indices a query is ranked against under the protocol."""
    return [
        i for i, item in enumerate(gallery)
        if item is not query
        and not (cross_camera_only and item.person_id == query.person_id and item.camera_id == query.camera_id)
    ]


def ranked_relevance_lists(queries: Sequence[EmbeddingRecord], gallery: Sequence[EmbeddingRecord],
                           cross_camera_only: bool) -> List[np.ndarray]:
    """Per-query relevance flags in ranking order; empty arrays for queries without candidates."""
    matrix = _gallery_matrix(gallery)
    lists: List[np.ndarray] = []
    for query in queries:
        candidates = np.asarray(query_candidates(query, gallery, cross_camera_only), dtype=np.int64)
        if candidates.size == 0:
            lists.append(np.zeros(0, dtype=bool))
            continue
        order = np.argsort(squared_distances(query.vector, matrix[candidates]), kind="stable")
        relevant = np.array([gallery[i].person_id == query.person_id for i in candidates], dtype=bool)
        lists.append(relevant[order])
    return lists


def evaluate(queries: Sequence[EmbeddingRecord], gallery: Sequence[EmbeddingRecord],
             protocol: Optional[ProtocolConfig] = None) -> EvalReport:
    """
    Rank every query against the gallery and compute CMC and mAP.

    Relevance is a shared person id. The query object itself is never ranked;
    under ``cross_camera_only`` items sharing the query's person and camera
    are dropped too. Queries left without a relevant item are skipped and
    counted.

    Raises:
        DegenerateDatasetError: Empty query or gallery set
    """
    protocol = protocol or ProtocolConfig()
    if not queries:
        raise DegenerateDatasetError("query set is empty", num_items=0)
    lists = ranked_relevance_lists(queries, gallery, protocol.cross_camera_only)
    evaluable = [r for r in lists if r.any()]
    skipped = len(lists) - len(evaluable)
    if skipped:
        logger.warning(f"{skipped} of {len(lists)} queries have no relevant gallery item and were skipped")

    longest = max((len(r) for r in (evaluable or lists)), default=0)
    k_max = protocol.max_rank if protocol.max_rank is not None else longest
    if k_max > longest:
        logger.warning(f"max_rank {k_max} exceeds the longest candidate list {longest}; clamping")
        k_max = longest
    cmc = cmc_curve(evaluable, k_max) if evaluable else np.zeros(k_max)
    report = EvalReport(
        cmc=[float(v) for v in cmc],
        mean_ap=mean_ap(evaluable),
        num_queries=len(evaluable),
        skipped_queries=skipped,
        metrics=ReidMetrics(protocol.report_ranks).evaluate_ranked(lists),
    )
    logger.info(f"Evaluated {report.num_queries} queries: rank1={report.rank(1):.4f} mAP={report.mean_ap:.4f}")
    return report


def write_embeddings_csv(path: Union[str, Path], records: Dict[str, Sequence[EmbeddingRecord]]) -> Path:
    """One row per sequence: split, person_id, camera_id, then the vector components."""
    rows = []
    for split, items in records.items():
        for record in items:
            row: Dict[str, Any] = {"split": split, "person_id": record.person_id, "camera_id": record.camera_id}
            row.update({f"v{j}": float(x) for j, x in enumerate(record.vector)})
            rows.append(row)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(path, index=False)
    return path
