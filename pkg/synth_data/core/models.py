"""
Core data models for synthetic tracklets and feature records.

TrackletSpec describes how one tracklet is rendered (identity appearance,
sinusoidal motion along a direction, noise and occlusion windows).
SequenceRecord is one labeled d×T frame-feature sequence, the unit stored
in feature files.
"""

from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MotionPattern(BaseModel):
    """Sinusoidal motion ``amplitude · sin(2π·frequency·t + phase)`` along ``direction``."""

    model_config = ConfigDict(extra='forbid')

    frequency: float = Field(..., ge=0.0, description="Cycles per frame")
    phase: float = Field(default=0.0, description="Phase offset in radians")
    amplitude: float = Field(default=1.0, ge=0.0, description="Peak displacement along the direction")
    direction: List[float] = Field(..., min_length=1, description="Unit direction vector of length d")

    @field_validator('direction')
    @classmethod
    def validate_direction(cls, v: List[float]) -> List[float]:
        """Ensure the direction has unit Euclidean norm."""
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f'direction must have unit norm, got {norm:.6g}')
        return v


class Occlusion(BaseModel):
    """Half-open frame window ``[start, end)`` replaced by ``occluder``."""

    model_config = ConfigDict(extra='forbid')

    start: int = Field(..., ge=0, description="First occluded frame")
    end: int = Field(..., ge=1, description="One past the last occluded frame")
    occluder: List[float] = Field(..., min_length=1, description="Occluder feature vector of length d")

    @model_validator(mode='after')
    def validate_window(self) -> 'Occlusion':
        if self.end <= self.start:
            raise ValueError(f'occlusion window [{self.start}, {self.end}) is empty')
        return self


class TrackletSpec(BaseModel):
    """
    Everything needed to render one synthetic tracklet.

    Occlusion windows must lie inside ``[0, length)`` and must not overlap.
    """

    model_config = ConfigDict(extra='forbid')

    person_id: int = Field(..., ge=0, description="Identity label")
    camera_id: int = Field(..., ge=0, description="Camera label")
    length: int = Field(..., ge=1, description="Number of frames T")
    appearance: List[float] = Field(..., min_length=1, description="Identity base feature of length d")
    motion: MotionPattern
    noise_sigma: float = Field(default=0.0, ge=0.0, description="Per-value Gaussian noise std")
    occlusions: List[Occlusion] = Field(default_factory=list)

    @model_validator(mode='after')
    def validate_geometry(self) -> 'TrackletSpec':
        d = len(self.appearance)
        if len(self.motion.direction) != d:
            raise ValueError(f'motion direction has length {len(self.motion.direction)}, expected {d}')
        previous_end = 0
        for window in sorted(self.occlusions, key=lambda o: o.start):
            if len(window.occluder) != d:
                raise ValueError(f'occluder has length {len(window.occluder)}, expected {d}')
            if window.end > self.length:
                raise ValueError(f'occlusion [{window.start}, {window.end}) exceeds length {self.length}')
            if window.start < previous_end:
                raise ValueError('occlusion windows overlap')
            previous_end = window.end
        return self

    @property
    def frame_dim(self) -> int:
        return len(self.appearance)

    def occlusion_mask(self) -> np.ndarray:
        """Boolean length-T vector, True on occluded frames."""
        mask = np.zeros(self.length, dtype=bool)
        for window in self.occlusions:
            mask[window.start:window.end] = True
        return mask


class SequenceRecord(BaseModel):
    """One labeled d×T frame-feature sequence."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra='forbid')

    person_id: int = Field(..., ge=0, lt=2 ** 32, description="Identity label")
    camera_id: int = Field(..., ge=0, lt=2 ** 32, description="Camera label")
    features: np.ndarray = Field(..., description="d×T float64 matrix, columns are frames")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="In-memory annotations, not serialized")

    @field_validator('features')
    @classmethod
    def validate_features(cls, v: Any) -> np.ndarray:
        arr = np.ascontiguousarray(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f'features must be a non-empty d×T matrix, got shape {arr.shape}')
        return arr

    @property
    def frame_dim(self) -> int:
        return int(self.features.shape[0])

    @property
    def length(self) -> int:
        return int(self.features.shape[1])
