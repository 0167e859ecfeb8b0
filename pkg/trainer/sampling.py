"""
Clip sampling and batch assembly.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from shared.exceptions import DegenerateDatasetError, InvalidParameterError, ShapeMismatchError
from synth_data.core.models import SequenceRecord

logger = logging.getLogger(__name__)


def clip_start(length: int, clip_length: int, rng: np.random.Generator) -> int:
    """Uniform start index of a window; 0 when the tracklet is not longer than the clip."""
    if length <= clip_length:
        return 0
    return int(rng.integers(0, length - clip_length + 1))


def sample_clip(tracklet: np.ndarray, clip_length: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw ``clip_length`` adjacent frames at a uniformly random start.

    Tracklets shorter than the clip are extended by repeating their last frame.

    Args:
        tracklet: d×T sequence, T ≥ 1
        clip_length: Frames in the returned clip
        rng: Sampling stream

    Returns:
        d×clip_length matrix (a copy)
    """
    if tracklet.ndim != 2 or tracklet.shape[1] == 0:
        raise InvalidParameterError("cannot sample from an empty tracklet",
                                    parameter="tracklet", value=tracklet.shape)
    if clip_length < 1:
        raise InvalidParameterError("clip_length must be positive", parameter="clip_length", value=clip_length)
    length = tracklet.shape[1]
    if length < clip_length:
        padding = np.repeat(tracklet[:, -1:], clip_length - length, axis=1)
        return np.concatenate([tracklet, padding], axis=1)
    start = clip_start(length, clip_length, rng)
    return tracklet[:, start:start + clip_length].copy()


@dataclass
class ClipBatch:
    """Equal-length clips and their identity indices."""

    clips: List[np.ndarray]
    labels: List[int]

    def __post_init__(self) -> None:
        if len(self.clips) != len(self.labels):
            raise ShapeMismatchError("one label per clip is required",
                                     expected=len(self.clips), actual=len(self.labels), operation="ClipBatch")
        if self.clips:
            shape = self.clips[0].shape
            for clip in self.clips[1:]:
                if clip.shape != shape:
                    raise ShapeMismatchError("clips in a batch must share d and T",
                                             expected=shape, actual=clip.shape, operation="ClipBatch")

    def __len__(self) -> int:
        return len(self.clips)


def label_index(dataset: Sequence[SequenceRecord]) -> Dict[int, int]:
    """
    Map person ids to contiguous class indices in ascending id order.

    Raises:
        DegenerateDatasetError: If the dataset is empty
    """
    if not dataset:
        raise DegenerateDatasetError("training set is empty", num_items=0)
    ids = sorted({record.person_id for record in dataset})
    if len(ids) == 1:
        logger.warning("Training set holds a single identity; the classifier task is trivial")
    return {person_id: index for index, person_id in enumerate(ids)}


def epoch_batches(dataset: Sequence[SequenceRecord], labels: Dict[int, int], clip_length: int,
                  batch_size: int, rng: np.random.Generator) -> List[ClipBatch]:
    """
    One epoch: every tracklet contributes exactly one clip, in shuffled order.

    Returns:
        Batches of at most ``batch_size`` clips
    """
    order = rng.permutation(len(dataset))
    clips: List[Tuple[np.ndarray, int]] = [
        (sample_clip(dataset[i].features, clip_length, rng), labels[dataset[i].person_id]) for i in order
    ]
    return [
        ClipBatch(clips=[c for c, _ in clips[k:k + batch_size]], labels=[y for _, y in clips[k:k + batch_size]])
        for k in range(0, len(clips), batch_size)
    ]
