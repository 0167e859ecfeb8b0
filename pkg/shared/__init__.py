"""
Cross-cutting utilities: exception hierarchy, logging setup, random streams.
"""

from .exceptions import (
    GltrError,
    ShapeMismatchError,
    InvalidParameterError,
    ConfigurationError,
    DegenerateDatasetError,
    FeatureFileError,
    CheckpointError,
    NumericalCheckError,
    create_user_friendly_error_message,
)

__all__ = [
    'GltrError',
    'ShapeMismatchError',
    'InvalidParameterError',
    'ConfigurationError',
    'DegenerateDatasetError',
    'FeatureFileError',
    'CheckpointError',
    'NumericalCheckError',
    'create_user_friendly_error_message',
]
