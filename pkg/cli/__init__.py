"""
Command-line front end for generating data, training, evaluating and tracing.
"""

from .config import ConfigManager, ExperimentConfig
from .commands import EXIT_ERROR, EXIT_NUMERICAL, EXIT_OK, build_parser, main

__all__ = [
    'ConfigManager',
    'ExperimentConfig',
    'EXIT_ERROR',
    'EXIT_NUMERICAL',
    'EXIT_OK',
    'build_parser',
    'main',
]
