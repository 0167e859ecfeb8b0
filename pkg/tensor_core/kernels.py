"""
Dense numeric kernels over 2-D float64 matrices.

A ``RealMatrix`` is a C-contiguous ``float64`` ndarray of shape (rows, cols).
Temporal operators take channel-by-time matrices (``c × T``): rows are
feature channels, columns are frames. Every forward kernel that takes part
in training has a matching ``*_backward`` that returns input and parameter
gradients given the upstream gradient.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt

from shared.exceptions import InvalidParameterError, ShapeMismatchError

RealMatrix = npt.NDArray[np.float64]
RealVector = npt.NDArray[np.float64]


def as_real_matrix(x: npt.ArrayLike, name: str = "x") -> RealMatrix:
    """Validate and convert input to a 2-D float64 matrix."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatchError(f"{name} must be a non-empty 2-D matrix",
                                 expected="(rows, cols)", actual=arr.shape)
    return arr


@dataclass
class DepthwiseKernel:
    """
    Per-channel temporal kernel.

    ``taps[c, j]`` multiplies channel c at tap j. Taps are indexed by centered
    offsets ``j - (w - 1) / 2`` unless a convolution is run in literal mode.
    """

    taps: RealMatrix

    def __post_init__(self) -> None:
        self.taps = as_real_matrix(self.taps, "taps")
        if self.width % 2 == 0:
            raise InvalidParameterError("kernel width must be odd", parameter="width", value=self.width)

    @property
    def channels(self) -> int:
        return int(self.taps.shape[0])

    @property
    def width(self) -> int:
        return int(self.taps.shape[1])

    @classmethod
    def identity(cls, channels: int, width: int = 3) -> "DepthwiseKernel":
        """Kernel whose center tap is 1 and all others 0."""
        taps = np.zeros((channels, width))
        taps[:, width // 2] = 1.0
        return cls(taps)


def matmul(a: RealMatrix, b: RealMatrix) -> RealMatrix:
    """
    Standard matrix product.

    Raises:
        ShapeMismatchError: If ``a.cols != b.rows``
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("inner dimensions do not agree",
                                 expected=a.shape[-1], actual=b.shape[0], operation="matmul")
    return a @ b


def tap_offsets(width: int, dilation: int, centered: bool = True) -> npt.NDArray[np.int64]:
    """
    Frame offsets read by each tap.

    Centered mode reads ``t + r·i`` for ``i`` in ``-(w-1)/2 .. (w-1)/2``;
    literal mode reads ``t + r·i`` for ``i`` in ``1 .. w``.
    """
    if width < 1 or width % 2 == 0:
        raise InvalidParameterError("kernel width must be odd", parameter="width", value=width)
    if dilation < 1:
        raise InvalidParameterError("dilation must be >= 1", parameter="dilation", value=dilation)
    if centered:
        half = (width - 1) // 2
        return dilation * np.arange(-half, half + 1, dtype=np.int64)
    return dilation * np.arange(1, width + 1, dtype=np.int64)


def receptive_radius(width: int, dilation: int) -> int:
    """Largest distance between an output frame and a frame it reads (centered mode)."""
    return dilation * (width - 1) // 2


def _pad_temporal(x: RealMatrix, offsets: npt.NDArray[np.int64]) -> Tuple[RealMatrix, int]:
    left = max(0, -int(offsets.min()))
    right = max(0, int(offsets.max()))
    padded = np.zeros((x.shape[0], x.shape[1] + left + right))
    padded[:, left:left + x.shape[1]] = x
    return padded, left


def depthwise_dilated_conv(x: RealMatrix, kernel: DepthwiseKernel, dilation: int,
                           centered: bool = True) -> RealMatrix:
    """
    Channel-wise dilated temporal convolution with zero padding.

    ``out[c, t] = Σ_j x[c, t + offset_j] · taps[c, j]``, where frames outside
    ``[0, T)`` read as zero. The output has the shape of ``x``.

    Args:
        x: d×T input sequence
        kernel: Depthwise kernel with ``kernel.channels == d``
        dilation: Dilation rate r >= 1
        centered: Use centered offsets (default) instead of the forward-only
            literal indexing

    Returns:
        d×T output sequence
    """
    if x.ndim != 2 or x.shape[0] != kernel.channels:
        raise ShapeMismatchError("sequence channels do not match kernel channels",
                                 expected=kernel.channels, actual=x.shape[0],
                                 operation="depthwise_dilated_conv")
    offsets = tap_offsets(kernel.width, dilation, centered)
    padded, left = _pad_temporal(x, offsets)
    steps = x.shape[1]
    out = np.zeros_like(x, dtype=np.float64)
    for j, offset in enumerate(offsets):
        start = left + int(offset)
        out += kernel.taps[:, j:j + 1] * padded[:, start:start + steps]
    return out


def depthwise_dilated_conv_backward(grad_out: RealMatrix, x: RealMatrix, kernel: DepthwiseKernel,
                                    dilation: int, centered: bool = True) -> Tuple[RealMatrix, RealMatrix]:
    """
    Gradients of ``depthwise_dilated_conv``.

    Returns:
        Tuple of (gradient w.r.t. x, gradient w.r.t. taps)
    """
    offsets = tap_offsets(kernel.width, dilation, centered)
    padded, left = _pad_temporal(x, offsets)
    steps = x.shape[1]
    grad_padded = np.zeros_like(padded)
    grad_taps = np.zeros_like(kernel.taps)
    for j, offset in enumerate(offsets):
        start = left + int(offset)
        grad_taps[:, j] = np.sum(grad_out * padded[:, start:start + steps], axis=1)
        grad_padded[:, start:start + steps] += kernel.taps[:, j:j + 1] * grad_out
    return grad_padded[:, left:left + steps], grad_taps


def pointwise_conv(x: RealMatrix, weights: RealMatrix, bias: RealVector) -> RealMatrix:
    """
    1×1 temporal convolution: every column t becomes ``weights · x[:, t] + bias``.

    Args:
        x: c_in×T input
        weights: c_out×c_in projection
        bias: length c_out

    Returns:
        c_out×T output
    """
    if weights.ndim != 2 or x.ndim != 2 or weights.shape[1] != x.shape[0]:
        raise ShapeMismatchError("projection input size does not match sequence channels",
                                 expected=weights.shape[-1], actual=x.shape[0], operation="pointwise_conv")
    if bias.shape != (weights.shape[0],):
        raise ShapeMismatchError("bias length does not match projection output size",
                                 expected=weights.shape[0], actual=bias.shape, operation="pointwise_conv")
    return weights @ x + bias[:, None]


def pointwise_conv_backward(grad_out: RealMatrix, x: RealMatrix,
                            weights: RealMatrix) -> Tuple[RealMatrix, RealMatrix, RealVector]:
    """
    Gradients of ``pointwise_conv``.

    Returns:
        Tuple of (gradient w.r.t. x, weights, bias)
    """
    return weights.T @ grad_out, grad_out @ x.T, grad_out.sum(axis=1)


def relu(x: RealMatrix) -> RealMatrix:
    """Elementwise ``max(0, x)``."""
    return np.maximum(x, 0.0)


def relu_backward(grad_out: RealMatrix, x: RealMatrix) -> RealMatrix:
    """Gradient of ``relu`` given its input ``x``."""
    return np.where(x > 0.0, grad_out, 0.0)


def row_softmax(x: RealMatrix) -> RealMatrix:
    """
    Softmax along each row, stabilized by subtracting the row maximum.

    Each output row sums to 1.
    """
    shifted = x - np.max(x, axis=1, keepdims=True)
    exps = np.exp(shifted)
    return exps / np.sum(exps, axis=1, keepdims=True)


def row_softmax_backward(grad_out: RealMatrix, probs: RealMatrix) -> RealMatrix:
    """Gradient of ``row_softmax`` given its output ``probs``."""
    inner = np.sum(grad_out * probs, axis=1, keepdims=True)
    return probs * (grad_out - inner)


def temporal_mean(x: RealMatrix) -> RealVector:
    """Average of the columns of a c×T matrix."""
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeMismatchError("temporal pooling needs at least one frame",
                                 expected="T >= 1", actual=x.shape, operation="temporal_mean")
    return x.sum(axis=1) / x.shape[1]


def pca_first_component(x: RealMatrix) -> RealVector:
    """
    Project the T columns of a c×T matrix onto their first principal component.

    Columns are mean-centered first. The component direction is signed so that
    its first non-negligible coordinate is positive. Zero-variance input returns
    a zero vector.

    Args:
        x: c×T matrix, T >= 2

    Returns:
        Length-T projection
    """
    if x.ndim != 2 or x.shape[1] < 2:
        raise ShapeMismatchError("PCA needs at least two columns",
                                 expected="T >= 2", actual=x.shape, operation="pca_first_component")
    centered = x - x.mean(axis=1, keepdims=True)
    scale = max(1.0, float(np.max(np.abs(x))))
    # left singular vectors of the centered matrix are the covariance eigenvectors
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    if s[0] <= 1e-12 * scale * np.sqrt(x.size):
        return np.zeros(x.shape[1])
    direction = u[:, 0]
    tol = 1e-12 * float(np.max(np.abs(direction)))
    first = direction[np.flatnonzero(np.abs(direction) > tol)[0]]
    if first < 0:
        direction = -direction
    return direction @ centered
