"""
Synthetic tracklet features with controllable appearance, motion and occlusion.
"""

from .config import BenchmarkConfig
from .core import MotionPattern, Occlusion, SequenceRecord, TrackletSpec
from .generator import (
    Benchmark,
    IdentityProfile,
    build_identities,
    generate_benchmark,
    lookalike_pair,
    marginal_statistics,
    render_tracklet,
    temporal_autocovariance,
)
from .feature_io import (
    decode_features,
    encode_features,
    read_features,
    write_features,
)

__all__ = [
    'BenchmarkConfig',
    'MotionPattern',
    'Occlusion',
    'SequenceRecord',
    'TrackletSpec',
    'Benchmark',
    'IdentityProfile',
    'build_identities',
    'generate_benchmark',
    'lookalike_pair',
    'marginal_statistics',
    'render_tracklet',
    'temporal_autocovariance',
    'decode_features',
    'encode_features',
    'read_features',
    'write_features',
]
