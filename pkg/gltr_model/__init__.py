"""
Temporal pyramid + self-attention aggregation network with analytic gradients.
"""

from .config import ModelConfig
from .layers import (
    AttentionMask,
    DtpLayer,
    Projection,
    TsaLayer,
    dtp_forward,
    dtp_backward,
    bin_average,
    tsa_forward,
    tsa_forward_batch,
    tsa_backward_batch,
)
from .network import (
    GltrNetwork,
    GradientTape,
    BatchOutput,
    temporal_avg_pool,
    forward_batch,
    gltr_embed,
    cross_entropy,
    forward_backward,
    forward_backward_batch,
    batch_loss,
)
from .gradcheck import GradCheckReport, GroupCheck, grad_check, randomize_zero_init, relative_error
from .checkpoint import (
    encode_checkpoint,
    decode_checkpoint,
    save_checkpoint,
    load_checkpoint,
)

__all__ = [
    'ModelConfig',
    'AttentionMask',
    'DtpLayer',
    'Projection',
    'TsaLayer',
    'dtp_forward',
    'dtp_backward',
    'bin_average',
    'tsa_forward',
    'tsa_forward_batch',
    'tsa_backward_batch',
    'GltrNetwork',
    'GradientTape',
    'BatchOutput',
    'temporal_avg_pool',
    'forward_batch',
    'gltr_embed',
    'cross_entropy',
    'forward_backward',
    'forward_backward_batch',
    'batch_loss',
    'GradCheckReport',
    'GroupCheck',
    'grad_check',
    'relative_error',
    'randomize_zero_init',
    'encode_checkpoint',
    'decode_checkpoint',
    'save_checkpoint',
    'load_checkpoint',
]
