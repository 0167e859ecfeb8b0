"""
Configuration for the synthetic re-identification benchmark.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class BenchmarkConfig(BaseModel):
    """
    Knobs of ``generate_benchmark``.

    Identities are grouped into look-alike pairs that share an appearance up to
    ``appearance_similarity`` (cosine) and share motion direction and
    amplitude, but move at different frequencies: one member draws from
    ``low_frequency_band``, the other from ``high_frequency_band``.
    """

    model_config = ConfigDict(validate_assignment=True, extra='forbid')

    num_identities: int = Field(default=20, ge=2, description="Number of identities")
    cameras: int = Field(default=2, ge=1, description="Number of cameras")
    tracklets_per_id_per_cam: int = Field(default=1, ge=1, description="Evaluation tracklets per identity and camera")
    train_tracklets_per_id: int = Field(default=4, ge=1, description="Training tracklets per identity")
    frame_dim: int = Field(default=16, ge=1, description="Frame feature dimension d")
    length: int = Field(default=32, ge=1, description="Frames per tracklet T")
    lookalike_fraction: float = Field(default=1.0, ge=0.0, le=1.0, description="Fraction of identities in look-alike pairs")
    appearance_similarity: float = Field(default=1.0, ge=0.0, le=1.0, description="Cosine similarity inside a pair")
    appearance_scale: float = Field(default=1.0, gt=0.0, description="Std of appearance components")
    amplitude: float = Field(default=1.0, ge=0.0, description="Motion amplitude")
    low_frequency_band: tuple[float, float] = Field(default=(0.03, 0.07), description="Frequency range of slow movers")
    high_frequency_band: tuple[float, float] = Field(default=(0.13, 0.17), description="Frequency range of fast movers")
    noise_sigma: float = Field(default=0.1, ge=0.0, description="Per-value Gaussian noise std")
    camera_bias_scale: float = Field(default=0.1, ge=0.0, description="Std of per-camera feature offsets")
    occlusion_probability: float = Field(default=0.0, ge=0.0, le=1.0, description="Chance a tracklet carries an occlusion window")
    occlusion_length_fraction: float = Field(default=0.25, gt=0.0, le=1.0, description="Occlusion window length as a fraction of T")
    occluder_scale: float = Field(default=0.1, gt=0.0, description="Std of occluder components; occluders carry weak activations")
    shared_occluders: bool = Field(default=True, description="One occluder per camera instead of one per tracklet")

    @model_validator(mode='after')
    def validate_bands(self) -> 'BenchmarkConfig':
        for name in ('low_frequency_band', 'high_frequency_band'):
            low, high = getattr(self, name)
            if not 0.0 <= low <= high:
                raise ValueError(f'{name} must satisfy 0 <= low <= high')
        return self
