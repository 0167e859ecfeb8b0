"""
Epoch loop: clip sampling, cross-entropy forward/backward and SGD updates.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from gltr_model.checkpoint import save_checkpoint
from gltr_model.network import GltrNetwork, GradientTape, forward_backward_batch
from shared import rng as rng_streams
from shared.exceptions import DegenerateDatasetError, InvalidParameterError
from synth_data.core.models import SequenceRecord
from tensor_core.batchnorm import Mode

from .config import TrainConfig
from .sampling import epoch_batches, label_index
from .schedule import lr_at_epoch

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "lr", "mean_loss", "train_accuracy"]


class TrainingLogEntry(BaseModel):
    """Summary of one epoch."""

    epoch: int = Field(..., ge=0)
    lr: float = Field(..., gt=0.0)
    mean_loss: float = Field(..., ge=0.0)
    train_accuracy: float = Field(..., ge=0.0, le=1.0)


class TrainingLog(BaseModel):
    """Per-epoch entries plus the person-id to class-index mapping used."""

    entries: List[TrainingLogEntry] = Field(default_factory=list)
    label_map: Dict[int, int] = Field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.model_dump() for e in self.entries], columns=LOG_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "TrainingLog":
        frame = pd.read_csv(path)
        return cls(entries=[
            TrainingLogEntry(epoch=int(row.epoch), lr=float(row.lr), mean_loss=float(row.mean_loss),
                             train_accuracy=float(row.train_accuracy))
            for row in frame.itertuples(index=False)
        ])


def sgd_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr: float,
             momentum: float = 0.0, weight_decay: float = 0.0,
             velocity: Optional[Dict[str, np.ndarray]] = None) -> None:
    """
    In-place update ``θ ← θ − lr·g`` for every group.

    With weight decay ``g`` gains ``weight_decay·θ``; with momentum the step
    uses the velocity ``v ← momentum·v + g`` kept in ``velocity``.
    """
    for name, param in params.items():
        grad = grads[name]
        if weight_decay:
            grad = grad + weight_decay * param
        if momentum:
            if velocity is None:
                raise InvalidParameterError("momentum needs a velocity buffer", parameter="velocity")
            buffer = velocity.setdefault(name, np.zeros_like(param))
            buffer *= momentum
            buffer += grad
            grad = buffer
        param -= lr * grad


def _check_dataset(dataset: Sequence[SequenceRecord], labels: Dict[int, int], net: GltrNetwork) -> None:
    if len(labels) < net.num_identities:
        raise DegenerateDatasetError(
            f"network classifies {net.num_identities} identities but only {len(labels)} have tracklets",
            num_items=len(dataset), num_identities=len(labels))
    if len(labels) > net.num_identities:
        raise InvalidParameterError(
            f"training set has {len(labels)} identities, network classifies {net.num_identities}",
            parameter="num_identities", value=net.num_identities)
    for record in dataset:
        if record.frame_dim != net.frame_dim:
            raise InvalidParameterError(f"tracklet has d={record.frame_dim}, network expects {net.frame_dim}",
                                        parameter="frame_dim", value=record.frame_dim)


def train(dataset: Sequence[SequenceRecord], net: GltrNetwork, cfg: TrainConfig,
          checkpoint_path: Optional[Union[str, Path]] = None,
          log_path: Optional[Union[str, Path]] = None,
          start_epoch: int = 0,
          on_epoch: Optional[Callable[[TrainingLogEntry], None]] = None) -> TrainingLog:
    """
    Train ``net`` in place with softmax cross-entropy and SGD.

    Each epoch draws one clip per tracklet from the stream for (seed, epoch),
    so resuming at ``start_epoch`` reproduces the uninterrupted run whenever
    momentum is off.

    Args:
        dataset: Labeled training tracklets
        net: Network to update; its classifier must cover every identity
        cfg: Training hyperparameters
        checkpoint_path: Where the final checkpoint is written
        log_path: Where the per-epoch CSV log is written
        start_epoch: Number of epochs already completed
        on_epoch: Called with each finished epoch's entry

    Returns:
        TrainingLog of the epochs run (preceded by earlier rows of an existing log when resuming)
    """
    labels = label_index(dataset)
    _check_dataset(dataset, labels, net)
    if not 0 <= start_epoch <= cfg.total_epochs:
        raise InvalidParameterError(f"start_epoch must lie in [0, {cfg.total_epochs}]",
                                    parameter="start_epoch", value=start_epoch)
    if net.dtp is not None:
        span = 2 * net.dtp.receptive_radius + 1
        if cfg.clip_length < span:
            logger.warning(f"clip_length {cfg.clip_length} is shorter than the widest receptive field ({span} frames)")

    log = TrainingLog(label_map=labels)
    if start_epoch > 0 and log_path is not None and Path(log_path).exists():
        previous = TrainingLog.read_csv(log_path)
        log.entries = [e for e in previous.entries if e.epoch < start_epoch]

    tape = GradientTape()
    velocity: Dict[str, np.ndarray] = {}
    params = net.parameters()
    logger.info(f"Training {net.config.variant_name} on {len(dataset)} tracklets of {len(labels)} identities, "
                f"epochs {start_epoch}..{cfg.total_epochs - 1}")

    for epoch in range(start_epoch, cfg.total_epochs):
        lr = lr_at_epoch(cfg, epoch)
        rng = rng_streams.stream(cfg.seed, rng_streams.EPOCH, epoch)
        total_loss = 0.0
        correct = 0
        for batch in epoch_batches(dataset, labels, cfg.clip_length, cfg.batch_size, rng):
            loss = forward_backward_batch(batch.clips, batch.labels, net, tape, Mode.TRAINING)
            total_loss += loss * len(batch)
            predictions = np.argmax(tape.cache.logits, axis=1)
            correct += int(np.sum(predictions == np.asarray(batch.labels)))
            logger.debug(f"epoch {epoch} batch loss {loss:.6f}")
            sgd_step(params, tape.grads, lr, cfg.momentum, cfg.weight_decay, velocity)

        entry = TrainingLogEntry(epoch=epoch, lr=lr, mean_loss=max(0.0, total_loss / len(dataset)),
                                 train_accuracy=correct / len(dataset))
        log.entries.append(entry)
        logger.info(f"epoch {epoch}: lr={lr:g} loss={entry.mean_loss:.4f} acc={entry.train_accuracy:.3f}")
        if on_epoch is not None:
            on_epoch(entry)

    if checkpoint_path is not None:
        save_checkpoint(net, checkpoint_path, epoch=cfg.total_epochs)
    if log_path is not None:
        log.write_csv(log_path)
    return log
