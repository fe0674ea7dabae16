"""
센서 데이터 수집기 패키지 초기화
"""

from .base_collector import BaseCollector
from .sensor_log import SensorFrame, SensorLog, LogReplayCollector, load_log, write_log, quantize
from .pen_simulator import (
    PenSimulator, PenWorld, SimParams, PolicyParams,
    wall_follow_policy, step_sim, CHANNEL_NAMES, ACTION_NAMES
)

__all__ = [
    'BaseCollector',
    'SensorFrame', 'SensorLog', 'LogReplayCollector', 'load_log', 'write_log', 'quantize',
    'PenSimulator', 'PenWorld', 'SimParams', 'PolicyParams',
    'wall_follow_policy', 'step_sim', 'CHANNEL_NAMES', 'ACTION_NAMES'
]
