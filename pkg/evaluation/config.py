"""
Configuration settings for the retrieval evaluation protocol.
"""

from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ProtocolConfig(BaseModel):
    """
    How queries are matched against the gallery.
    """

    model_config = ConfigDict(validate_assignment=True, extra='forbid')

    cross_camera_only: bool = Field(default=True, description="Drop gallery items sharing both person and camera with the query")
    max_rank: Optional[int] = Field(default=None, ge=1, description="Length of the CMC curve; None means the longest candidate list")
    report_ranks: Tuple[int, ...] = Field(default=(1, 5, 10, 20), description="Rank-k accuracies written to reports")

    @field_validator('report_ranks')
    @classmethod
    def validate_report_ranks(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        """Ensure reported ranks are positive and ascending."""
        if not v or any(k < 1 for k in v) or list(v) != sorted(set(v)):
            raise ValueError('report_ranks must be positive, unique and ascending')
        return v
