"""
내보내기 패키지 초기화
"""

from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .report_exporter import (
    ReportWorkbook, write_csv, export_curve, export_alignment, export_returns, safe_name
)

__all__ = [
    'Checkpoint', 'save_checkpoint', 'load_checkpoint',
    'ReportWorkbook', 'write_csv', 'export_curve', 'export_alignment', 'export_returns', 'safe_name'
]
