"""
유틸리티 패키지 초기화
"""

from .logger import setup_logger, get_logger
from .errors import (
    NextingError, ConfigurationError, InputError, LogParseError,
    NumericError, ManifestMismatchError
)
from .progress_tracker import ProgressTracker

__all__ = [
    'setup_logger', 'get_logger',
    'NextingError', 'ConfigurationError', 'InputError', 'LogParseError',
    'NumericError', 'ManifestMismatchError',
    'ProgressTracker'
]
