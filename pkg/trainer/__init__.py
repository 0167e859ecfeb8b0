"""
SGD training of the aggregation network on labeled tracklets.
"""

from .config import TrainConfig
from .sampling import ClipBatch, clip_start, epoch_batches, label_index, sample_clip
from .schedule import lr_at_epoch
from .loop import LOG_COLUMNS, TrainingLog, TrainingLogEntry, sgd_step, train

__all__ = [
    'TrainConfig',
    'ClipBatch',
    'clip_start',
    'epoch_batches',
    'label_index',
    'sample_clip',
    'lr_at_epoch',
    'LOG_COLUMNS',
    'TrainingLog',
    'TrainingLogEntry',
    'sgd_step',
    'train',
]
