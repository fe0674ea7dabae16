"""
공통 예외 정의
- 설정/입력/수치/파싱/매니페스트 오류
- CLI 종료 코드 매핑
"""

from typing import Optional


class NextingError(Exception):
    """모든 도메인 예외의 베이스"""
    exit_code = 1


class ConfigurationError(NextingError, ValueError):
    """타일링/예측 스펙/시뮬레이터 설정 오류"""
    exit_code = 2


class InputError(NextingError, ValueError):
    """입력 데이터 오류 (범위, 차원, 빈 구간 등)"""
    exit_code = 2


class LogParseError(InputError):
    """센서 로그 파싱 오류 (줄 번호 포함)"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{line_number}번째 줄: {message}"
        super().__init__(message)


class NumericError(NextingError, ArithmeticError):
    """발산 등 수치 오류 (예측 id, 스텝 포함)"""
    exit_code = 3

    def __init__(
        self,
        message: str,
        prediction_id: Optional[int] = None,
        step: Optional[int] = None
    ):
        self.prediction_id = prediction_id
        self.step = step
        details = []
        if prediction_id is not None:
            details.append(f"prediction_id={prediction_id}")
        if step is not None:
            details.append(f"step={step}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)


class ManifestMismatchError(NextingError):
    """리포트 입력 매니페스트 불일치"""
    exit_code = 4
