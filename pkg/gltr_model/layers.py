"""
Temporal pyramid and temporal self-attention layers.

Both layers expose a forward pass that records what its backward pass needs
in a per-layer cache, and a backward pass that returns input gradients and
fills parameter gradients into a dictionary keyed by parameter-group name.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from shared.exceptions import InvalidParameterError, ShapeMismatchError
from tensor_core import (
    BatchNormCache,
    BatchNormState,
    DepthwiseKernel,
    Mode,
    RealMatrix,
    RealVector,
    batchnorm_temporal,
    batchnorm_temporal_backward,
    depthwise_dilated_conv,
    depthwise_dilated_conv_backward,
    pointwise_conv,
    pointwise_conv_backward,
    receptive_radius,
    relu,
    relu_backward,
    row_softmax,
    row_softmax_backward,
)

from .config import PyramidKind

logger = logging.getLogger(__name__)

Grads = Dict[str, np.ndarray]


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _accumulate(grads: Optional[Grads], name: str, value: np.ndarray) -> None:
    if grads is None:
        return
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value.copy()


@dataclass
class Projection:
    """Weights and bias of a 1×1 temporal convolution."""

    weight: RealMatrix
    bias: RealVector

    @classmethod
    def uniform(cls, rng: np.random.Generator, out_dim: int, in_dim: int) -> "Projection":
        return cls(_uniform(rng, (out_dim, in_dim), in_dim), _uniform(rng, (out_dim,), in_dim))

    @classmethod
    def zeros(cls, out_dim: int, in_dim: int) -> "Projection":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim))

    def __call__(self, x: RealMatrix) -> RealMatrix:
        return pointwise_conv(x, self.weight, self.bias)

    def backward(self, grad_out: RealMatrix, x: RealMatrix, grads: Optional[Grads],
                 prefix: str) -> RealMatrix:
        grad_x, grad_w, grad_b = pointwise_conv_backward(grad_out, x, self.weight)
        _accumulate(grads, f"{prefix}.weight", grad_w)
        _accumulate(grads, f"{prefix}.bias", grad_b)
        return grad_x


# ---------------------------------------------------------------------------
# Dilated temporal pyramid
# ---------------------------------------------------------------------------

@dataclass
class DtpLayer:
    """
    N parallel depthwise temporal convolutions whose outputs are stacked.

    Branch n (1-based) of the dilated pyramid uses dilation 2^(n-1).
    """

    branches: List[DepthwiseKernel]
    dilations: List[int]
    input_channels: int
    centered: bool = True
    kind: PyramidKind = "dilated"

    def __post_init__(self) -> None:
        if len(self.branches) != len(self.dilations) or not self.branches:
            raise InvalidParameterError("one dilation per branch is required",
                                        parameter="dilations", value=self.dilations)
        for n, kernel in enumerate(self.branches):
            if kernel.channels != self.input_channels:
                raise ShapeMismatchError("branch kernel channels differ from the layer input",
                                         expected=self.input_channels, actual=kernel.channels,
                                         operation=f"dtp.branch{n}")
        if self.kind == "dilated":
            widths = {kernel.width for kernel in self.branches}
            if len(widths) != 1:
                raise InvalidParameterError("dilated branches share one kernel width",
                                            parameter="width", value=sorted(widths))
            expected = [2 ** n for n in range(len(self.branches))]
            if list(self.dilations) != expected:
                raise InvalidParameterError("dilations must be 1, 2, 4, ...",
                                            parameter="dilations", value=self.dilations)

    @classmethod
    def build(cls, channels: int, num_branches: int, width: int, rng: np.random.Generator,
              kind: PyramidKind = "dilated", centered: bool = True) -> "DtpLayer":
        """
        Construct a pyramid with uniformly initialized taps.

        Args:
            channels: Frame feature dimension d
            num_branches: Number of branches N
            width: Base kernel width w
            rng: Initialization stream
            kind: ``dilated``, ``wide`` or ``pooling``
            centered: Tap indexing mode
        """
        branches: List[DepthwiseKernel] = []
        dilations: List[int] = []
        for n in range(num_branches):
            rate = 2 ** n
            if kind == "dilated":
                taps = _uniform(rng, (channels, width), width)
                dilations.append(rate)
            else:
                span = rate * (width - 1) + 1
                if kind == "wide":
                    taps = _uniform(rng, (channels, span), span)
                else:
                    taps = np.full((channels, span), 1.0 / span)
                dilations.append(1)
            branches.append(DepthwiseKernel(taps))
        return cls(branches=branches, dilations=dilations, input_channels=channels,
                   centered=centered, kind=kind)

    @property
    def num_branches(self) -> int:
        return len(self.branches)

    @property
    def output_channels(self) -> int:
        return self.num_branches * self.input_channels

    @property
    def trainable(self) -> bool:
        return self.kind != "pooling"

    @property
    def receptive_radius(self) -> int:
        """Widest centered receptive radius over the branches."""
        return max(receptive_radius(k.width, r) for k, r in zip(self.branches, self.dilations))


def dtp_forward(f: RealMatrix, layer: DtpLayer) -> RealMatrix:
    """
    Run every branch on a d×T sequence and stack the results to N·d × T.

    Rows ``[n·d, (n+1)·d)`` hold branch n's output.
    """
    if f.ndim != 2 or f.shape[0] != layer.input_channels:
        raise ShapeMismatchError("sequence channels do not match the pyramid input",
                                 expected=layer.input_channels, actual=f.shape[0], operation="dtp_forward")
    if layer.kind == "pooling":
        outputs = [bin_average(f, kernel.width) for kernel in layer.branches]
    else:
        outputs = [
            depthwise_dilated_conv(f, kernel, rate, centered=layer.centered)
            for kernel, rate in zip(layer.branches, layer.dilations)
        ]
    return np.concatenate(outputs, axis=0)


def dtp_backward(grad_out: RealMatrix, f: RealMatrix, layer: DtpLayer,
                 grads: Optional[Grads] = None) -> RealMatrix:
    """Backward pass of ``dtp_forward``; returns the gradient w.r.t. ``f``."""
    d = layer.input_channels
    grad_f = np.zeros_like(f)
    for n, (kernel, rate) in enumerate(zip(layer.branches, layer.dilations)):
        branch_grad = grad_out[n * d:(n + 1) * d]
        if layer.kind == "pooling":
            # bin averaging followed by repetition is a symmetric linear map
            grad_f += bin_average(branch_grad, kernel.width)
            continue
        grad_branch, grad_taps = depthwise_dilated_conv_backward(
            branch_grad, f, kernel, rate, centered=layer.centered)
        grad_f += grad_branch
        _accumulate(grads, f"dtp.branch{n}.taps", grad_taps)
    return grad_f


def bin_average(f: RealMatrix, size: int) -> RealMatrix:
    """
    Average consecutive non-overlapping bins of ``size`` frames and repeat
    each mean over its bin, so the output keeps the input's d×T shape.

    The last bin holds the remaining ``T mod size`` frames when T is not a
    multiple of ``size``.
    """
    if size < 1:
        raise InvalidParameterError("bin size must be positive", parameter="size", value=size)
    length = f.shape[1]
    if length == 0:
        return np.zeros_like(f)
    starts = np.arange(0, length, size)
    counts = np.minimum(starts + size, length) - starts
    means = np.add.reduceat(f, starts, axis=1) / counts
    return np.repeat(means, counts, axis=1)


# ---------------------------------------------------------------------------
# Temporal self-attention
# ---------------------------------------------------------------------------

@dataclass
class AttentionMask:
    """T×T frame affinity matrix M and its column sums m."""

    m_matrix: RealMatrix
    m_vector: RealVector

    @classmethod
    def from_matrix(cls, m_matrix: RealMatrix) -> "AttentionMask":
        return cls(m_matrix=m_matrix, m_vector=m_matrix.sum(axis=0))


@dataclass
class TsaLayer:
    """
    Temporal self-attention with a residual output projection.

    ``proj_b`` and ``proj_c`` feed the key and query maps through batch norm
    and ReLU; ``proj_f`` produces the values; ``out_proj`` maps the attended
    values back to the input width and starts at exactly zero.
    """

    proj_b: Projection
    proj_c: Projection
    proj_f: Projection
    bn_b: BatchNormState
    bn_c: BatchNormState
    out_proj: Projection
    alpha: int
    normalize_mask: bool = True

    @classmethod
    def build(cls, channels: int, alpha: int, rng: np.random.Generator, normalize_mask: bool = True,
              bn_eps: float = 1e-5, bn_momentum: float = 0.1) -> "TsaLayer":
        """
        Construct an attention block over ``channels``-wide input.

        Raises:
            InvalidParameterError: If alpha does not divide ``channels``
        """
        if alpha < 1 or channels % alpha != 0:
            raise InvalidParameterError(f"alpha must divide the input width {channels}",
                                        parameter="alpha", value=alpha)
        reduced = channels // alpha
        return cls(
            proj_b=Projection.uniform(rng, reduced, channels),
            proj_c=Projection.uniform(rng, reduced, channels),
            proj_f=Projection.uniform(rng, reduced, channels),
            bn_b=BatchNormState(reduced, eps=bn_eps, momentum=bn_momentum),
            bn_c=BatchNormState(reduced, eps=bn_eps, momentum=bn_momentum),
            out_proj=Projection.zeros(channels, reduced),
            alpha=alpha,
            normalize_mask=normalize_mask,
        )

    @property
    def channels(self) -> int:
        return int(self.proj_b.weight.shape[1])

    @property
    def reduced_channels(self) -> int:
        return int(self.proj_b.weight.shape[0])


@dataclass
class TsaCache:
    """Intermediates of one batched attention forward pass."""

    lengths: List[int]
    x: RealMatrix
    pre_b: RealMatrix
    pre_c: RealMatrix
    keys: RealMatrix
    queries: RealMatrix
    values: RealMatrix
    attended: RealMatrix
    masks: List[RealMatrix] = field(default_factory=list)
    bn_caches: List[BatchNormCache] = field(default_factory=list)


def _split(x: RealMatrix, lengths: Sequence[int]) -> List[RealMatrix]:
    return np.split(x, np.cumsum(lengths)[:-1], axis=1)


def tsa_forward_batch(fps: Sequence[RealMatrix], layer: TsaLayer, mode: Mode = Mode.INFERENCE,
                      cache: Optional[list] = None) -> Tuple[List[RealMatrix], List[AttentionMask]]:
    """
    Attention over a batch of sequences sharing batch-norm statistics.

    The projections and batch norm see the batch as one Nd × ΣT matrix; the
    T×T masks are formed per sequence, so frames of different sequences never
    attend to each other.

    Returns:
        Tuple of (per-sequence outputs, per-sequence attention masks)
    """
    for fp in fps:
        if fp.ndim != 2 or fp.shape[0] != layer.channels:
            raise ShapeMismatchError("sequence width does not match the attention input",
                                     expected=layer.channels, actual=fp.shape[0], operation="tsa_forward")
    lengths = [fp.shape[1] for fp in fps]
    x = np.concatenate(fps, axis=1)
    bn_caches: List[BatchNormCache] = []

    pre_b = batchnorm_temporal(layer.proj_b(x), layer.bn_b, mode, bn_caches)
    pre_c = batchnorm_temporal(layer.proj_c(x), layer.bn_c, mode, bn_caches)
    keys = relu(pre_b)
    queries = relu(pre_c)
    values = layer.proj_f(x)

    masks: List[RealMatrix] = []
    attended_parts: List[RealMatrix] = []
    for k_i, q_i, v_i in zip(_split(keys, lengths), _split(queries, lengths), _split(values, lengths)):
        scores = q_i.T @ k_i
        mask = row_softmax(scores) if layer.normalize_mask else scores
        masks.append(mask)
        attended_parts.append(v_i @ mask.T)
    attended = np.concatenate(attended_parts, axis=1)

    delta = layer.out_proj(attended)
    # x + 0.0 would turn -0.0 into 0.0
    out = np.where(delta == 0.0, x, x + delta)
    if cache is not None:
        cache.append(TsaCache(lengths=lengths, x=x, pre_b=pre_b, pre_c=pre_c, keys=keys,
                              queries=queries, values=values, attended=attended,
                              masks=masks, bn_caches=bn_caches))
    return _split(out, lengths), [AttentionMask.from_matrix(m) for m in masks]


def tsa_forward(fp: RealMatrix, layer: TsaLayer,
                mode: Mode = Mode.INFERENCE) -> Tuple[RealMatrix, AttentionMask]:
    """Attention over a single Nd×T sequence."""
    outputs, masks = tsa_forward_batch([fp], layer, mode)
    return outputs[0], masks[0]


def tsa_backward_batch(grad_outs: Sequence[RealMatrix], layer: TsaLayer, cache: TsaCache,
                       grads: Optional[Grads] = None) -> List[RealMatrix]:
    """Backward pass of ``tsa_forward_batch``; returns per-sequence input gradients."""
    lengths = cache.lengths
    grad_out = np.concatenate(list(grad_outs), axis=1)

    grad_x = grad_out.copy()
    grad_attended = layer.out_proj.backward(grad_out, cache.attended, grads, "tsa.out_proj")

    grad_values, grad_keys, grad_queries = [], [], []
    for g_att, mask, k_i, q_i, v_i in zip(_split(grad_attended, lengths), cache.masks,
                                          _split(cache.keys, lengths), _split(cache.queries, lengths),
                                          _split(cache.values, lengths)):
        grad_values.append(g_att @ mask)
        grad_mask = g_att.T @ v_i
        grad_scores = row_softmax_backward(grad_mask, mask) if layer.normalize_mask else grad_mask
        grad_queries.append(k_i @ grad_scores.T)
        grad_keys.append(q_i @ grad_scores)

    grad_x += layer.proj_f.backward(np.concatenate(grad_values, axis=1), cache.x, grads, "tsa.proj_f")

    for name, proj, bn, pre, grad_act, bn_cache in (
        ("b", layer.proj_b, layer.bn_b, cache.pre_b, grad_keys, cache.bn_caches[0]),
        ("c", layer.proj_c, layer.bn_c, cache.pre_c, grad_queries, cache.bn_caches[1]),
    ):
        grad_pre = relu_backward(np.concatenate(grad_act, axis=1), pre)
        grad_proj, grad_gamma, grad_beta = batchnorm_temporal_backward(grad_pre, bn, bn_cache)
        _accumulate(grads, f"tsa.bn_{name}.gamma", grad_gamma)
        _accumulate(grads, f"tsa.bn_{name}.beta", grad_beta)
        grad_x += proj.backward(grad_proj, cache.x, grads, f"tsa.proj_{name}")

    return _split(grad_x, lengths)
