"""
Batch normalization over the time axis of channel-by-time matrices.

A mini-batch of clips is normalized as one c×(B·T) matrix: the per-channel
statistics are taken over every frame of every clip in the batch.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from shared.exceptions import InvalidParameterError, ShapeMismatchError

from .kernels import RealMatrix, RealVector


class Mode(str, Enum):
    """Whether layers use batch statistics or frozen running statistics."""
    TRAINING = "training"
    INFERENCE = "inference"


@dataclass
class BatchNormState:
    """Affine parameters and running statistics of one batch-norm layer."""

    channels: int
    eps: float = 1e-5
    momentum: float = 0.1
    gamma: RealVector = field(default=None)  # type: ignore[assignment]
    beta: RealVector = field(default=None)  # type: ignore[assignment]
    running_mean: RealVector = field(default=None)  # type: ignore[assignment]
    running_var: RealVector = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.channels < 1:
            raise InvalidParameterError("channels must be positive", parameter="channels", value=self.channels)
        if not self.eps > 0:
            raise InvalidParameterError("eps must be positive", parameter="eps", value=self.eps)
        if not 0.0 < self.momentum < 1.0:
            raise InvalidParameterError("momentum must lie in (0, 1)", parameter="momentum", value=self.momentum)
        if self.gamma is None:
            self.gamma = np.ones(self.channels)
        if self.beta is None:
            self.beta = np.zeros(self.channels)
        if self.running_mean is None:
            self.running_mean = np.zeros(self.channels)
        if self.running_var is None:
            self.running_var = np.ones(self.channels)


@dataclass
class BatchNormCache:
    """Forward intermediates needed by ``batchnorm_temporal_backward``."""

    mode: Mode
    x_hat: RealMatrix
    inv_std: RealVector


def batchnorm_temporal(x: RealMatrix, state: BatchNormState, mode: Mode = Mode.INFERENCE,
                       cache: Optional[list] = None) -> RealMatrix:
    """
    Normalize each channel of a c×n matrix.

    Training mode uses the mean and biased variance of the current input and
    updates the running statistics (running variance uses the unbiased
    estimate). Inference mode is an affine map built from the running
    statistics.

    Args:
        x: c×n input, where n spans batch and time
        state: Layer state, mutated in training mode
        mode: Training or inference
        cache: When a list is given, a ``BatchNormCache`` is appended to it

    Returns:
        Normalized c×n matrix
    """
    if x.ndim != 2 or x.shape[0] != state.channels:
        raise ShapeMismatchError("input channels do not match batch-norm state",
                                 expected=state.channels, actual=x.shape[0], operation="batchnorm_temporal")
    mode = Mode(mode)
    if mode is Mode.TRAINING:
        count = x.shape[1]
        mean = x.mean(axis=1)
        var = x.var(axis=1)
        inv_std = 1.0 / np.sqrt(var + state.eps)
        x_hat = (x - mean[:, None]) * inv_std[:, None]
        unbiased = var * count / (count - 1) if count > 1 else var
        state.running_mean = (1.0 - state.momentum) * state.running_mean + state.momentum * mean
        state.running_var = (1.0 - state.momentum) * state.running_var + state.momentum * unbiased
    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        x_hat = (x - state.running_mean[:, None]) * inv_std[:, None]

    if cache is not None:
        cache.append(BatchNormCache(mode=mode, x_hat=x_hat, inv_std=inv_std))
    return state.gamma[:, None] * x_hat + state.beta[:, None]


def batchnorm_temporal_backward(grad_out: RealMatrix, state: BatchNormState,
                                cache: BatchNormCache) -> Tuple[RealMatrix, RealVector, RealVector]:
    """
    Gradients of ``batchnorm_temporal``.

    Training mode differentiates through the batch statistics.

    Returns:
        Tuple of (gradient w.r.t. x, gamma, beta)
    """
    grad_gamma = np.sum(grad_out * cache.x_hat, axis=1)
    grad_beta = np.sum(grad_out, axis=1)
    scale = (state.gamma * cache.inv_std)[:, None]
    if cache.mode is Mode.INFERENCE:
        return grad_out * scale, grad_gamma, grad_beta

    count = grad_out.shape[1]
    grad_x = scale / count * (
        count * grad_out
        - grad_beta[:, None]
        - cache.x_hat * grad_gamma[:, None]
    )
    return grad_x, grad_gamma, grad_beta
