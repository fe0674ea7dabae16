"""
리포트 내보내기
- 학습 곡선 CSV (bin,rmse_normalized)
- 이벤트 정렬 CSV (offset,signal,return,prediction)
- 리턴 CSV (step,value), 스텝별 예측 CSV
- 요약 엑셀 (openpyxl)
"""

import logging
import os
from datetime import datetime
from typing import Dict, Optional

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.utils.dataframe import dataframe_to_rows

logger = logging.getLogger("nexting.exporter")

CSV_FLOAT_FORMAT = '%.10g'


def write_csv(df: pd.DataFrame, path: str) -> str:
    """고정 형식 CSV 저장 (줄바꿈 \\n, 소수 10 유효자리)"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"CSV 저장: {path} ({len(df):,}행)")
    return path


def export_curve(curve, path: str) -> str:
    return write_csv(curve.to_frame(), path)


def export_alignment(aligned, path: str) -> str:
    return write_csv(aligned.to_frame(), path)


def export_returns(series, path: str) -> str:
    return write_csv(series.to_frame(), path)


def safe_name(label: str) -> str:
    """라벨 → 파일 이름 (sensor:light|const:0.95 → sensor-light_const-0.95)"""
    return label.replace('|', '_').replace(':', '-').replace(',', '-')


_THIN = Side(style='thin', color='D9D9D9')
TABLE_STYLE = {
    'header_font': Font(bold=True, color='FFFFFF', size=10),
    'header_fill': PatternFill('solid', fgColor='4472C4'),
    'band_fill': PatternFill('solid', fgColor='F2F2F2'),
    'border': Border(left=_THIN, right=_THIN, top=_THIN, bottom=_THIN),
    'float_format': '0.000000',
}


def _display_width(value) -> float:
    # 한글은 1.5칸
    return sum(1.5 if '가' <= ch <= '힣' else 1 for ch in str(value))


def fit_columns(ws, min_width: int = 8, max_width: int = 40) -> None:
    """열 너비를 내용 길이에 맞춤"""
    for column in ws.iter_cols():
        widest = max((_display_width(c.value) for c in column if c.value is not None), default=0)
        ws.column_dimensions[get_column_letter(column[0].column)].width = min(max(widest + 2, min_width), max_width)


def style_table(ws, style: Dict = TABLE_STYLE) -> None:
    """1행 헤더 + 줄무늬 본문"""
    for cell in ws[1]:
        cell.font = style['header_font']
        cell.fill = style['header_fill']
        cell.alignment = Alignment(horizontal='center', vertical='center')

    for offset, row in enumerate(ws.iter_rows(min_row=2)):
        banded = offset % 2 == 1
        for cell in row:
            cell.border = style['border']
            if banded:
                cell.fill = style['band_fill']
            if isinstance(cell.value, float):
                cell.number_format = style['float_format']


class ReportWorkbook:
    """평가 요약 엑셀"""

    SUMMARY_SHEET = "📊 요약"

    def __init__(self, output_dir: str = "outputs"):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)
        self.created = datetime.now()
        self.wb = Workbook()
        self.wb.remove(self.wb.active)

    def add_table_sheet(self, title: str, df: pd.DataFrame) -> None:
        """DataFrame → 표 시트 (필터, 고정 틀 포함)"""
        ws = self.wb.create_sheet(title[:31])
        if df is None or df.empty:
            ws['A1'] = "데이터 없음"
            return

        for values in dataframe_to_rows(df, index=False, header=True):
            ws.append(list(values))
        style_table(ws)
        fit_columns(ws)
        ws.auto_filter.ref = ws.dimensions
        ws.freeze_panes = 'B2'

    def add_summary_sheet(self, summary: Dict) -> None:
        """항목/값 두 열 요약 (맨 앞 시트)"""
        ws = self.wb.create_sheet(self.SUMMARY_SHEET, 0)
        ws['A1'] = "📊 예측 평가 요약"
        ws['A1'].font = Font(bold=True, size=14)

        items = [('생성일시', f"{self.created:%Y-%m-%d %H:%M:%S}"), (None, None)]
        items += [(str(k), v if isinstance(v, (int, float)) else str(v)) for k, v in summary.items()]
        for row, (label, value) in enumerate(items, start=3):
            if label is None:
                continue
            ws.cell(row=row, column=1, value=label).font = Font(bold=True)
            ws.cell(row=row, column=2, value=value)

        ws.column_dimensions['A'].width = 28
        ws.column_dimensions['B'].width = 70

    def save(self, filename: Optional[str] = None) -> str:
        name = filename or f"report_{self.created:%Y%m%d_%H%M%S}"
        if not name.endswith('.xlsx'):
            name += '.xlsx'
        path = os.path.join(self.output_dir, name)
        self.wb.save(path)
        logger.info(f"엑셀 저장: {path}")
        return path
