"""
실행 로깅
- 콘솔(stderr) + 일별 파일
- 레벨 이름/정수 모두 허용
- 모듈별 nexting.<이름> 하위 로거
"""

import logging
import os
import sys
from datetime import datetime
from typing import List, Optional, Union

ROOT_LOGGER_NAME = "nexting"
LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _parse_level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    parsed = logging.getLevelName(str(level).upper())
    return parsed if isinstance(parsed, int) else logging.INFO


def _build_handlers(log_dir: Optional[str]) -> List[logging.Handler]:
    # stdout은 history 표 출력용으로 비워 둔다
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        filename = f"{ROOT_LOGGER_NAME}_{datetime.now():%Y%m%d}.log"
        handlers.append(logging.FileHandler(os.path.join(log_dir, filename), encoding='utf-8'))
    return handlers


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    log_dir: Optional[str] = "logs",
    level: Union[int, str] = logging.INFO
) -> logging.Logger:
    """
    로거 설정

    두 번째 호출부터는 핸들러를 새로 달지 않고 레벨만 바꾼다.

    Args:
        name: 로거 이름
        log_dir: 일별 로그 파일 디렉토리 (None이면 콘솔만)
        level: 'DEBUG' 같은 이름 또는 logging 상수
    """
    level = _parse_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
        for handler in _build_handlers(log_dir):
            handler.setFormatter(formatter)
            logger.addHandler(handler)

    for handler in logger.handlers:
        handler.setLevel(level)
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """nexting 하위 로거 (None이면 루트)"""
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}" if name else ROOT_LOGGER_NAME)
