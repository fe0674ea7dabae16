"""
센서 로그 모듈
- SensorFrame / SensorLog 자료형
- CSV 로그 저장/로드 (고정 소수 6자리, 비트 단위 왕복 보장)
- 로그 재생 수집기
"""

import logging
import os
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from utils.errors import InputError, LogParseError
from .base_collector import BaseCollector

logger = logging.getLogger("nexting.sensor_log")

DECIMALS = 6
FLOAT_FORMAT = f"%.{DECIMALS}f"


def quantize(values: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """
    채널 값을 로그 포맷 정밀도로 양자화

    '%.6f' 문자열을 다시 파싱한 값과 동일한 double을 만든다.
    """
    return np.array([float(FLOAT_FORMAT % v) for v in values], dtype=np.float64)


@dataclass(frozen=True)
class SensorFrame:
    """한 스텝의 정규화 센서 값 + 실행 행동"""
    step: int
    channels: np.ndarray      # 각 값 [0, 1]
    action: int

    @property
    def width(self) -> int:
        return len(self.channels)


@dataclass
class SensorLog:
    """
    센서 로그 (열 기반 저장)

    channels: (N, C) 배열, steps/actions: (N,) 배열
    """
    channel_names: List[str]
    steps: np.ndarray
    actions: np.ndarray
    channels: np.ndarray

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=np.int64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.channels = np.asarray(self.channels, dtype=np.float64).reshape(len(self.steps), len(self.channel_names))

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[SensorFrame]:
        for i in range(len(self)):
            yield self.frame(i)

    def frame(self, i: int) -> SensorFrame:
        return SensorFrame(step=int(self.steps[i]), channels=self.channels[i], action=int(self.actions[i]))

    def channel(self, name_or_id: Union[str, int]) -> np.ndarray:
        """채널 시계열 (이름 또는 id)"""
        return self.channels[:, self.channel_index(name_or_id)]

    def channel_index(self, name_or_id: Union[str, int]) -> int:
        if isinstance(name_or_id, (int, np.integer)):
            idx = int(name_or_id)
        elif str(name_or_id).lstrip('-').isdigit():
            idx = int(name_or_id)
        elif name_or_id in self.channel_names:
            idx = self.channel_names.index(name_or_id)
        else:
            raise InputError(f"알 수 없는 채널: {name_or_id}")
        if not 0 <= idx < len(self.channel_names):
            raise InputError(f"채널 id 범위 초과: {idx}")
        return idx

    @classmethod
    def from_frames(cls, frames: Sequence[SensorFrame], channel_names: Sequence[str]) -> 'SensorLog':
        """프레임 리스트에서 생성"""
        width = len(channel_names)
        if frames:
            channels = np.vstack([np.asarray(f.channels, dtype=np.float64) for f in frames])
        else:
            channels = np.zeros((0, width))
        return cls(
            channel_names=list(channel_names),
            steps=np.array([f.step for f in frames], dtype=np.int64),
            actions=np.array([f.action for f in frames], dtype=np.int64),
            channels=channels,
        )

    def to_frame(self) -> pd.DataFrame:
        """CSV 레이아웃의 DataFrame"""
        df = pd.DataFrame(self.channels, columns=self.channel_names)
        df.insert(0, 'action', self.actions)
        df.insert(0, 'step', self.steps)
        return df


def write_log(
    frames: Union[SensorLog, Sequence[SensorFrame]],
    path: str,
    channel_names: Optional[Sequence[str]] = None
) -> str:
    """
    센서 로그 CSV 저장

    헤더: step,action,<채널 이름...> / 값: 소수 6자리 고정

    Args:
        frames: SensorLog 또는 SensorFrame 리스트
        path: 저장 경로
        channel_names: frames가 리스트일 때 필수
    """
    if isinstance(frames, SensorLog):
        log = frames
    else:
        if channel_names is None:
            raise InputError("프레임 리스트 저장에는 channel_names가 필요합니다")
        log = SensorLog.from_frames(list(frames), channel_names)

    if len(log) and ((log.channels < 0).any() or (log.channels > 1).any()):
        raise InputError("채널 값은 [0, 1] 범위여야 합니다")

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    log.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"센서 로그 저장: {path} ({len(log):,}행)")
    return path


def load_log(path: str) -> SensorLog:
    """
    센서 로그 CSV 로드

    Raises:
        LogParseError: 열 개수 불일치, 숫자 아님, [0,1] 범위 밖 (줄 번호 포함)
    """
    if not os.path.exists(path):
        raise InputError(f"로그 파일이 없습니다: {path}")

    with open(path, 'r', encoding='utf-8') as f:
        header = f.readline().strip()
    if not header:
        raise LogParseError("헤더가 없습니다", line_number=1)

    columns = header.split(',')
    if columns[:2] != ['step', 'action']:
        raise LogParseError("헤더는 'step,action,...'으로 시작해야 합니다", line_number=1)
    channel_names = columns[2:]

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line_number = int(match.group(1)) if match else None
        raise LogParseError("열 개수 불일치", line_number=line_number) from e

    if df.empty:
        return SensorLog(channel_names, np.zeros(0), np.zeros(0), np.zeros((0, len(channel_names))))

    # 누락된 열은 빈 문자열로 채워진다
    missing = (df == '').any(axis=1).to_numpy()
    if missing.any():
        row = int(np.argmax(missing))
        raise LogParseError(f"열 개수 불일치 (기대 {len(columns)}개)", line_number=row + 2)

    values = df.apply(pd.to_numeric, errors='coerce')
    bad = values.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        raise LogParseError("숫자가 아닌 값이 있습니다", line_number=row + 2)

    # 문자열 그대로 float 변환 (최근접 double, 왕복 보장)
    channels = df[channel_names].to_numpy(dtype=np.float64)
    out_of_range = ((channels < 0) | (channels > 1)).any(axis=1)
    if out_of_range.any():
        row = int(np.argmax(out_of_range))
        raise LogParseError("채널 값이 [0, 1] 범위 밖입니다", line_number=row + 2)

    log = SensorLog(
        channel_names=channel_names,
        steps=values['step'].to_numpy(dtype=np.int64),
        actions=values['action'].to_numpy(dtype=np.int64),
        channels=channels,
    )
    logger.info(f"센서 로그 로드: {path} ({len(log):,}행, 채널 {len(channel_names)}개)")
    return log


class LogReplayCollector(BaseCollector):
    """저장된 센서 로그를 프레임 단위로 재생"""

    def __init__(self, path: str):
        super().__init__(name="replay")
        self.path = path
        self.log = load_log(path)

    @property
    def channel_names(self) -> List[str]:
        return self.log.channel_names

    def collect(self, steps: Optional[int] = None) -> SensorLog:
        if steps is None or steps >= len(self.log):
            return self.log
        return SensorLog(
            self.log.channel_names,
            self.log.steps[:steps],
            self.log.actions[:steps],
            self.log.channels[:steps],
        )
