"""
Core data models for synthetic tracklet generation.
"""

from .models import MotionPattern, Occlusion, TrackletSpec, SequenceRecord

__all__ = [
    'MotionPattern',
    'Occlusion',
    'TrackletSpec',
    'SequenceRecord',
]
