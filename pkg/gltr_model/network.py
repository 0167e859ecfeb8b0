"""
GLTR network: temporal pyramid, self-attention, average pooling and an
identity classifier, with an analytic backward pass.

The forward pass works on a batch of clips. Frame-level stages run per clip;
the attention projections and their batch norm see the whole batch, so
training-mode statistics span batch × time.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from shared import rng as rng_streams
from shared.exceptions import InvalidParameterError, ShapeMismatchError
from tensor_core import Mode, RealMatrix, RealVector, temporal_mean

from .config import ModelConfig
from .layers import (
    AttentionMask,
    DtpLayer,
    Projection,
    TsaCache,
    TsaLayer,
    dtp_backward,
    dtp_forward,
    tsa_backward_batch,
    tsa_forward_batch,
)

logger = logging.getLogger(__name__)


@dataclass
class StateSlot:
    """One named array of network state."""

    name: str
    owner: object
    attr: str
    trainable: bool

    def get(self) -> np.ndarray:
        return getattr(self.owner, self.attr)

    def set(self, value: np.ndarray) -> None:
        current = self.get()
        if current.shape != value.shape:
            raise ShapeMismatchError(f"state '{self.name}' has the wrong shape",
                                     expected=current.shape, actual=value.shape)
        setattr(self.owner, self.attr, np.array(value, dtype=np.float64))


class GltrNetwork:
    """
    Frame-feature aggregation network with an identity-classification head.

    Attributes:
        config: Architecture hyperparameters
        dtp: Temporal pyramid, or None in the no-pyramid ablations
        tsa: Attention block, or None in the no-attention ablations
        classifier: num_identities × embed_dim projection
    """

    def __init__(self, config: ModelConfig, dtp: Optional[DtpLayer], tsa: Optional[TsaLayer],
                 classifier: Projection):
        self.config = config
        self.dtp = dtp
        self.tsa = tsa
        self.classifier = classifier

    @classmethod
    def build(cls, config: ModelConfig) -> "GltrNetwork":
        """
        Construct a freshly initialized network.

        Taps and projections are uniform in ±1/sqrt(fan_in); the attention
        output projection is zero; batch norm starts at gamma=1, beta=0.
        """
        init = rng_streams.stream(config.init_seed, rng_streams.INIT)
        dtp = None
        if config.use_dtp:
            dtp = DtpLayer.build(config.frame_dim, config.num_branches, config.kernel_width, init,
                                 kind=config.pyramid, centered=config.centered_taps)
        tsa = None
        if config.use_tsa:
            tsa = TsaLayer.build(config.embed_dim, config.alpha, init,
                                 normalize_mask=config.normalize_mask,
                                 bn_eps=config.bn_eps, bn_momentum=config.bn_momentum)
        classifier = Projection.uniform(init, config.num_identities, config.embed_dim)
        logger.debug(f"Built {config.variant_name} network: d={config.frame_dim}, "
                     f"N={config.num_branches}, embed_dim={config.embed_dim}")
        return cls(config, dtp, tsa, classifier)

    @property
    def frame_dim(self) -> int:
        return self.config.frame_dim

    @property
    def num_branches(self) -> int:
        return self.config.num_branches

    @property
    def embed_dim(self) -> int:
        return self.config.embed_dim

    @property
    def num_identities(self) -> int:
        return self.config.num_identities

    def state_slots(self) -> List[StateSlot]:
        """
        Every array of network state in declaration order.

        Batch-norm running statistics follow their gamma/beta and are not
        trainable.
        """
        slots: List[StateSlot] = []
        if self.dtp is not None and self.dtp.trainable:
            for n, kernel in enumerate(self.dtp.branches):
                slots.append(StateSlot(f"dtp.branch{n}.taps", kernel, "taps", True))
        if self.tsa is not None:
            for name, proj, bn in (("b", self.tsa.proj_b, self.tsa.bn_b), ("c", self.tsa.proj_c, self.tsa.bn_c)):
                slots.append(StateSlot(f"tsa.proj_{name}.weight", proj, "weight", True))
                slots.append(StateSlot(f"tsa.proj_{name}.bias", proj, "bias", True))
                slots.append(StateSlot(f"tsa.bn_{name}.gamma", bn, "gamma", True))
                slots.append(StateSlot(f"tsa.bn_{name}.beta", bn, "beta", True))
                slots.append(StateSlot(f"tsa.bn_{name}.running_mean", bn, "running_mean", False))
                slots.append(StateSlot(f"tsa.bn_{name}.running_var", bn, "running_var", False))
            slots.append(StateSlot("tsa.proj_f.weight", self.tsa.proj_f, "weight", True))
            slots.append(StateSlot("tsa.proj_f.bias", self.tsa.proj_f, "bias", True))
            slots.append(StateSlot("tsa.out_proj.weight", self.tsa.out_proj, "weight", True))
            slots.append(StateSlot("tsa.out_proj.bias", self.tsa.out_proj, "bias", True))
        slots.append(StateSlot("classifier.weight", self.classifier, "weight", True))
        slots.append(StateSlot("classifier.bias", self.classifier, "bias", True))
        return slots

    def parameters(self) -> Dict[str, np.ndarray]:
        """Trainable arrays keyed by group name (live references)."""
        return {slot.name: slot.get() for slot in self.state_slots() if slot.trainable}

    def named_state(self) -> Iterator[Tuple[str, np.ndarray]]:
        for slot in self.state_slots():
            yield slot.name, slot.get()


@dataclass
class ForwardCache:
    """Intermediates of one batched forward pass."""

    inputs: List[RealMatrix]
    pyramid: List[RealMatrix]
    attended: List[RealMatrix]
    embeddings: RealMatrix
    logits: RealMatrix
    tsa_cache: Optional[TsaCache] = None


@dataclass
class GradientTape:
    """
    Gradient accumulators for one forward/backward pass.

    ``grads`` maps every trainable parameter group to an array of matching
    shape; ``input_grads`` holds the gradient w.r.t. each input clip.
    """

    grads: Dict[str, np.ndarray] = field(default_factory=dict)
    input_grads: List[RealMatrix] = field(default_factory=list)
    cache: Optional[ForwardCache] = None
    loss: float = 0.0

    def reset(self, net: GltrNetwork) -> None:
        self.grads = {name: np.zeros_like(value) for name, value in net.parameters().items()}
        self.input_grads = []
        self.cache = None
        self.loss = 0.0


@dataclass
class BatchOutput:
    """Embeddings, logits and attention masks of a forward pass."""

    embeddings: RealMatrix
    logits: RealMatrix
    pyramid: List[RealMatrix]
    attended: List[RealMatrix]
    masks: List[Optional[AttentionMask]]


def temporal_avg_pool(fpp: RealMatrix) -> RealVector:
    """Fixed-length embedding: average of the columns of an Nd×T matrix."""
    return temporal_mean(fpp)


def forward_batch(clips: Sequence[RealMatrix], net: GltrNetwork, mode: Mode = Mode.INFERENCE,
                  cache: Optional[list] = None) -> BatchOutput:
    """
    Forward a batch of d×T clips through the network.

    Args:
        clips: Sequences with ``rows == net.frame_dim``; lengths may differ
        net: Network
        mode: Batch-norm mode; training mode updates running statistics
        cache: When a list is given, a ``ForwardCache`` is appended to it

    Returns:
        BatchOutput with one embedding row and logit row per clip
    """
    if not clips:
        raise ShapeMismatchError("forward pass needs at least one clip", expected=">= 1", actual=0)
    for clip in clips:
        if clip.ndim != 2 or clip.shape[0] != net.frame_dim or clip.shape[1] < 1:
            raise ShapeMismatchError("clip does not match the network frame dimension",
                                     expected=net.frame_dim, actual=clip.shape, operation="gltr_embed")

    pyramid = [dtp_forward(c, net.dtp) if net.dtp is not None else c for c in clips]
    tsa_cache: List[TsaCache] = []
    masks: List[Optional[AttentionMask]]
    if net.tsa is not None:
        attended, tsa_masks = tsa_forward_batch(pyramid, net.tsa, mode,
                                                tsa_cache if cache is not None else None)
        masks = list(tsa_masks)
    else:
        attended = list(pyramid)
        masks = [None] * len(clips)

    embeddings = np.stack([temporal_avg_pool(a) for a in attended])
    logits = embeddings @ net.classifier.weight.T + net.classifier.bias
    if cache is not None:
        cache.append(ForwardCache(inputs=list(clips), pyramid=pyramid, attended=attended,
                                  embeddings=embeddings, logits=logits,
                                  tsa_cache=tsa_cache[0] if tsa_cache else None))
    return BatchOutput(embeddings=embeddings, logits=logits, pyramid=pyramid, attended=attended, masks=masks)


def gltr_embed(f: RealMatrix, net: GltrNetwork,
               mode: Mode = Mode.INFERENCE) -> Tuple[RealVector, Optional[AttentionMask]]:
    """
    Aggregate one d×T sequence into its fixed-length embedding.

    Returns:
        Tuple of (embedding, attention mask or None without attention)
    """
    out = forward_batch([f], net, mode)
    return out.embeddings[0], out.masks[0]


def cross_entropy(logits: RealMatrix, labels: Sequence[int]) -> Tuple[float, RealMatrix, RealMatrix]:
    """
    Mean softmax cross-entropy over a batch.

    Returns:
        Tuple of (mean loss, class probabilities, gradient w.r.t. logits)
    """
    labels_arr = np.asarray(labels, dtype=np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(len(labels_arr))
    losses = -log_probs[rows, labels_arr]
    probs = np.exp(log_probs)
    grad = probs.copy()
    grad[rows, labels_arr] -= 1.0
    grad /= len(labels_arr)
    return float(losses.mean()), probs, grad


def _check_labels(labels: Sequence[int], net: GltrNetwork) -> None:
    for label in labels:
        if not 0 <= int(label) < net.num_identities:
            raise InvalidParameterError(f"label must lie in [0, {net.num_identities})",
                                        parameter="label", value=label)


def forward_backward_batch(clips: Sequence[RealMatrix], labels: Sequence[int], net: GltrNetwork,
                           tape: GradientTape, mode: Mode = Mode.TRAINING) -> float:
    """
    Mean cross-entropy of a batch and its gradients.

    After the call ``tape.grads`` holds ∂loss/∂θ for every trainable group and
    ``tape.input_grads`` holds ∂loss/∂clip for each clip.

    Returns:
        Mean loss over the batch
    """
    if len(clips) != len(labels):
        raise ShapeMismatchError("one label per clip is required", expected=len(clips), actual=len(labels))
    _check_labels(labels, net)
    tape.reset(net)

    caches: List[ForwardCache] = []
    forward_batch(clips, net, mode, caches)
    cache = caches[0]
    loss, _, grad_logits = cross_entropy(cache.logits, labels)

    grads = tape.grads
    grads["classifier.weight"] += grad_logits.T @ cache.embeddings
    grads["classifier.bias"] += grad_logits.sum(axis=0)
    grad_embed = grad_logits @ net.classifier.weight

    grad_attended = [
        np.repeat((g / a.shape[1])[:, None], a.shape[1], axis=1)
        for g, a in zip(grad_embed, cache.attended)
    ]
    if net.tsa is not None and cache.tsa_cache is not None:
        grad_pyramid = tsa_backward_batch(grad_attended, net.tsa, cache.tsa_cache, grads)
    else:
        grad_pyramid = grad_attended

    if net.dtp is not None:
        tape.input_grads = [dtp_backward(g, x, net.dtp, grads) for g, x in zip(grad_pyramid, cache.inputs)]
    else:
        tape.input_grads = [g.copy() for g in grad_pyramid]

    tape.cache = cache
    tape.loss = loss
    return loss


def forward_backward(f: RealMatrix, label: int, net: GltrNetwork, tape: GradientTape,
                     mode: Mode = Mode.TRAINING) -> float:
    """Cross-entropy of one sequence and its gradients (a batch of one)."""
    return forward_backward_batch([f], [label], net, tape, mode)


def batch_loss(clips: Sequence[RealMatrix], labels: Sequence[int], net: GltrNetwork,
               mode: Mode = Mode.INFERENCE) -> float:
    """Mean cross-entropy without gradients."""
    _check_labels(labels, net)
    out = forward_batch(clips, net, mode)
    loss, _, _ = cross_entropy(out.logits, labels)
    return loss
