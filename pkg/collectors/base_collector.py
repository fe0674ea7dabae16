"""
공통 센서 수집기 베이스 클래스
- 수집기 이름/로거
- 스텝 단위 수집 인터페이스
"""

import logging
from abc import ABC, abstractmethod
from typing import List, Optional


class BaseCollector(ABC):
    """
    센서 데이터 수집기 베이스 클래스

    시뮬레이터와 로그 재생기가 상속하는 추상 클래스
    """

    def __init__(self, name: str):
        """
        Args:
            name: 수집기 이름 (로거 이름에 사용)
        """
        self.name = name
        self.logger = logging.getLogger(f"nexting.{name}")

    @property
    @abstractmethod
    def channel_names(self) -> List[str]:
        """채널 이름 목록 (프레임 폭 고정)"""

    @abstractmethod
    def collect(self, steps: Optional[int] = None):
        """스텝 수만큼 센서 로그 수집 (하위 클래스에서 구현)"""

    def close(self) -> None:
        """자원 정리"""
        pass
