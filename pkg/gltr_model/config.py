"""
Model hyperparameters for the temporal aggregation network.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


PyramidKind = Literal["dilated", "wide", "pooling"]


class ModelConfig(BaseModel):
    """
    Architecture of a GltrNetwork.

    ``pyramid`` selects how the local temporal branches are built:
    ``dilated`` uses width-w kernels with dilation 2^(n-1); ``wide`` uses
    dilation 1 with the width of the matching dilated receptive field;
    ``pooling`` replaces each branch with averages over non-overlapping bins
    of that window's length, repeated back to the full sequence length.
    """

    model_config = ConfigDict(validate_assignment=True, extra='forbid')

    frame_dim: int = Field(default=128, ge=1, description="Frame feature dimension d")
    num_branches: int = Field(default=3, ge=1, le=10, description="Number of pyramid branches N")
    kernel_width: int = Field(default=3, ge=1, description="Temporal kernel width w (odd)")
    alpha: int = Field(default=2, ge=1, description="Channel reduction factor of the attention projections")
    num_identities: int = Field(default=2, ge=1, description="Number of classifier outputs")
    normalize_mask: bool = Field(default=True, description="Row-softmax the attention mask")
    centered_taps: bool = Field(default=True, description="Centered tap offsets instead of forward-only offsets")
    use_dtp: bool = Field(default=True, description="Enable the temporal pyramid stage")
    use_tsa: bool = Field(default=True, description="Enable the temporal self-attention stage")
    pyramid: PyramidKind = Field(default="dilated", description="Pyramid branch construction")
    bn_eps: float = Field(default=1e-5, gt=0.0, description="Batch-norm epsilon")
    bn_momentum: float = Field(default=0.1, gt=0.0, lt=1.0, description="Batch-norm running-stat momentum")
    init_seed: int = Field(default=0, ge=0, description="Seed for parameter initialization")

    @field_validator('kernel_width')
    @classmethod
    def validate_kernel_width(cls, v: int) -> int:
        """Ensure the kernel has a well-defined center tap."""
        if v % 2 == 0:
            raise ValueError('kernel_width must be odd')
        return v

    @model_validator(mode='after')
    def validate_alpha_divides_embedding(self) -> 'ModelConfig':
        """Ensure alpha divides the attention input width."""
        if self.use_tsa and self.embed_dim % self.alpha != 0:
            raise ValueError(f'alpha={self.alpha} must divide the embedding dimension {self.embed_dim}')
        return self

    @property
    def embed_dim(self) -> int:
        """Length of the pooled embedding: N·d with the pyramid, d without."""
        return self.num_branches * self.frame_dim if self.use_dtp else self.frame_dim

    @property
    def variant_name(self) -> str:
        """Ablation row this configuration corresponds to."""
        if self.use_dtp and self.use_tsa:
            return "gltr"
        if self.use_dtp:
            return "dtp_only"
        if self.use_tsa:
            return "tsa_only"
        return "baseline"
