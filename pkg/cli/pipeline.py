"""
Composable steps shared by the commands: embedding, variant runs and traces.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from evaluation.config import ProtocolConfig
from evaluation.metrics import MetricResult, ReidMetrics
from evaluation.retrieval import EmbeddingRecord, EvalReport, evaluate
from gltr_model.config import ModelConfig
from gltr_model.network import GltrNetwork, forward_batch, gltr_embed
from synth_data.core.models import SequenceRecord
from synth_data.generator import Benchmark
from tensor_core import Mode, pca_first_component
from trainer.config import TrainConfig
from trainer.loop import TrainingLog, train

logger = logging.getLogger(__name__)

VARIANTS: Dict[str, Dict[str, bool]] = {
    "baseline": {"use_dtp": False, "use_tsa": False},
    "dtp_only": {"use_dtp": True, "use_tsa": False},
    "tsa_only": {"use_dtp": False, "use_tsa": True},
    "gltr": {"use_dtp": True, "use_tsa": True},
}


def embed_sequences(records: Sequence[SequenceRecord], net: GltrNetwork, threads: int = 1) -> List[EmbeddingRecord]:
    """Inference-mode embedding of every record, in input order."""
    def embed(record: SequenceRecord) -> EmbeddingRecord:
        vector, _ = gltr_embed(record.features, net, Mode.INFERENCE)
        return EmbeddingRecord(person_id=record.person_id, camera_id=record.camera_id, vector=vector)

    if threads <= 1:
        return [embed(r) for r in records]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(embed, records))


def raw_average_embeddings(records: Sequence[SequenceRecord]) -> List[EmbeddingRecord]:
    """Temporal average of raw frames, with no network at all."""
    return [
        EmbeddingRecord(person_id=r.person_id, camera_id=r.camera_id, vector=r.features.mean(axis=1))
        for r in records
    ]


def model_for_dataset(base: ModelConfig, dataset: Sequence[SequenceRecord], seed: int,
                      **overrides: bool) -> ModelConfig:
    """Model config with d and the identity count taken from the training set."""
    data = base.model_dump()
    data.update(frame_dim=dataset[0].frame_dim,
                num_identities=len({r.person_id for r in dataset}),
                init_seed=seed)
    data.update(overrides)
    return ModelConfig(**data)


@dataclass
class VariantResult:
    """Outcome of training and evaluating one ablation variant."""

    name: str
    net: GltrNetwork
    log: TrainingLog
    report: EvalReport


def run_variant(benchmark: Benchmark, name: str, model: ModelConfig, train_cfg: TrainConfig,
                seed: int, protocol: Optional[ProtocolConfig] = None, threads: int = 1) -> VariantResult:
    """Train one variant on the benchmark's training split and evaluate query vs gallery."""
    cfg = model_for_dataset(model, benchmark.train, seed, **VARIANTS[name])
    net = GltrNetwork.build(cfg)
    log = train(benchmark.train, net, train_cfg.model_copy(update={"seed": seed}))
    report = evaluate(embed_sequences(benchmark.query, net, threads),
                      embed_sequences(benchmark.gallery, net, threads), protocol)
    logger.info(f"{name} (seed {seed}): rank1={report.rank(1):.3f} mAP={report.mean_ap:.3f}")
    return VariantResult(name=name, net=net, log=log, report=report)


def aggregate_reports(reports: Sequence[EvalReport], ranks: Sequence[int] = (1, 5, 10, 20)) -> Dict[str, MetricResult]:
    """
    Combine the per-metric results of several runs of one variant, e.g. one per seed.

    Each entry's score is the mean over runs; ``metadata["median"]`` holds the median.
    """
    return ReidMetrics(ranks).aggregate([report.metrics for report in reports])


@dataclass
class TraceBundle:
    """1×T PCA rows of the three feature stages plus the attention mask."""

    pca_frames: np.ndarray
    pca_dtp: np.ndarray
    pca_tsa: np.ndarray
    mask: Optional[np.ndarray]
    mask_weights: Optional[np.ndarray]


def trace_sequence(features: np.ndarray, net: GltrNetwork) -> TraceBundle:
    """Inference-mode intermediates of one sequence, reduced for plotting."""
    out = forward_batch([features], net, Mode.INFERENCE)
    mask = out.masks[0]
    return TraceBundle(
        pca_frames=pca_first_component(features),
        pca_dtp=pca_first_component(out.pyramid[0]),
        pca_tsa=pca_first_component(out.attended[0]),
        mask=None if mask is None else mask.m_matrix,
        mask_weights=None if mask is None else mask.m_vector,
    )


def occluded_weight_gap(net: GltrNetwork, records: Sequence[SequenceRecord]) -> List[float]:
    """
    Per record: mean mask weight over clean frames minus mean over occluded frames.

    Records without an occlusion mask in their metadata, or without clean
    frames, are skipped.
    """
    gaps: List[float] = []
    for record in records:
        occluded = np.asarray(record.metadata.get("occlusion_mask", []), dtype=bool)
        if occluded.size != record.length or not occluded.any() or occluded.all():
            continue
        _, mask = gltr_embed(record.features, net, Mode.INFERENCE)
        if mask is None:
            continue
        gaps.append(float(mask.m_vector[~occluded].mean() - mask.m_vector[occluded].mean()))
    return gaps
