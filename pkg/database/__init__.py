"""
실행 기록 데이터베이스 패키지
"""

from .models import Base, RunRecord, ProbeMetric, init_db, get_session
from .repository import RunRepository, DatabaseManager

__all__ = [
    'Base', 'RunRecord', 'ProbeMetric', 'init_db', 'get_session',
    'RunRepository', 'DatabaseManager'
]
