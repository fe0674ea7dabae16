"""
명령 진행 표시
- 단계 헤더 / 완료 줄
- 스텝 루프 tqdm 진행률
- 단계별 처리 속도 요약
"""

import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

from tqdm import tqdm

RULE = "=" * 60


@dataclass
class StageInfo:
    """진행 중이거나 끝난 단계"""
    index: int
    name: str
    items: int
    started: float = field(default_factory=time.perf_counter)
    elapsed: Optional[float] = None

    def close(self) -> float:
        self.elapsed = time.perf_counter() - self.started
        return self.elapsed

    @property
    def rate(self) -> Optional[float]:
        """초당 처리 건수"""
        if not self.elapsed or self.items <= 1:
            return None
        return self.items / self.elapsed


def format_duration(seconds: Optional[float]) -> str:
    """초 → M:SS 또는 H:MM:SS"""
    if seconds is None or seconds < 0:
        return "--:--"
    minutes, secs = divmod(int(seconds), 60)
    hours, minutes = divmod(minutes, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}" if hours else f"{minutes:02d}:{secs:02d}"


class ProgressTracker:
    """
    simulate / learn / solve / report 명령의 단계 진행 표시

    모든 출력은 stderr로 보내며 quiet=True면 아무것도 찍지 않는다.
    """

    def __init__(self, total_steps: int = 3, title: str = "", quiet: bool = False):
        self.total_steps = total_steps
        self.title = title
        self.quiet = quiet
        self.stages: List[StageInfo] = []
        self._active: Optional[StageInfo] = None
        self._started = time.perf_counter()
        self._lock = threading.Lock()

    def _emit(self, *lines: str) -> None:
        if self.quiet:
            return
        for line in lines:
            print(line, file=sys.stderr)

    def start_step(self, step_name: str, total_items: int = 1) -> None:
        with self._lock:
            self._active = StageInfo(len(self.stages) + 1, step_name, total_items)
            self._emit("", RULE, f"📍 [{self._active.index}/{self.total_steps}] {step_name}", RULE)

    def iterate(self, iterable: Iterable, total: Optional[int] = None, unit: str = "step") -> Iterable:
        """현재 단계의 루프를 tqdm으로 감싸기"""
        if total is None and self._active is not None:
            total = self._active.items
        return tqdm(iterable, total=total, unit=unit, disable=self.quiet,
                    leave=False, file=sys.stderr, mininterval=0.5)

    def finish_step(self, message: Optional[str] = None) -> None:
        if self._active is None:
            return
        with self._lock:
            stage = self._active
            elapsed = stage.close()
            self.stages.append(stage)
            self._active = None
            self._emit(f"  ✓ {message or '완료'} ({format_duration(elapsed)})")

    def show_summary(self) -> None:
        lines = ["", RULE, f"📊 {self.title or '실행'} 완료 요약", RULE]
        for stage in self.stages:
            speed = f", {stage.rate:,.0f}건/초" if stage.rate else ""
            lines.append(f"  • {stage.name}: {stage.items:,}건 ({format_duration(stage.elapsed)}{speed})")
        lines += ["-" * 60, f"  ⏱️  총 소요 시간: {format_duration(time.perf_counter() - self._started)}", RULE]
        self._emit(*lines)
