"""
Step learning-rate schedule.
"""

from shared.exceptions import InvalidParameterError

from .config import TrainConfig


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """
    Learning rate used during ``epoch`` (0-based).

    The decayed rate applies from ``cfg.lr_decay_epoch`` onward.

    Raises:
        InvalidParameterError: If epoch is outside ``[0, total_epochs)``
    """
    if not 0 <= epoch < cfg.total_epochs:
        raise InvalidParameterError(f"epoch must lie in [0, {cfg.total_epochs})",
                                    parameter="epoch", value=epoch)
    if epoch < cfg.lr_decay_epoch:
        return cfg.lr_initial
    return cfg.lr_initial * cfg.lr_decay_factor
