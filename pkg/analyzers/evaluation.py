"""
평가 도구
- 정규화 RMSE 학습 곡선 (RMSE x (1 − γ))
- 빛 포화 시작 시점 검출 (불응기 포함)
- 이벤트 정렬 평균 (신호 / 리턴 / 예측)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.errors import InputError

logger = logging.getLogger("nexting.evaluation")

DEFAULT_BIN_SIZE = 1000
DEFAULT_THRESHOLD = 0.99
DEFAULT_REFRACTORY = 100


@dataclass
class LearningCurve:
    """구간별 정규화 RMSE"""
    bin_size: int
    gamma: float
    bins: np.ndarray
    values: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'bin': self.bins, 'rmse_normalized': self.values})

    @property
    def final(self) -> float:
        return float(self.values[-1])


@dataclass
class AlignedAverage:
    """이벤트 시작 시점 기준 정렬 평균"""
    before: int
    after: int
    event_count: int
    dropped: int
    means: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.before, self.after + 1)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.means[name]

    def at(self, name: str, offset: int) -> float:
        """offset(음수 = 시작 전) 위치의 평균값"""
        return float(self.means[name][offset + self.before])

    def to_frame(self) -> pd.DataFrame:
        data = {'offset': self.offsets}
        data.update(self.means)
        return pd.DataFrame(data)


def _aligned(predictions, returns) -> Tuple[np.ndarray, np.ndarray]:
    ret = np.asarray(returns, dtype=np.float64)
    pred = np.asarray(predictions, dtype=np.float64)
    if len(pred) < len(ret):
        raise InputError(f"예측({len(pred)})이 리턴({len(ret)})보다 짧습니다")
    return pred[:len(ret)], ret


def normalized_rmse(
    predictions: Sequence[float],
    returns: Sequence[float],
    gamma: float,
    bin_size: int = DEFAULT_BIN_SIZE
) -> LearningCurve:
    """
    구간별 RMSE(pred − return) x (1 − γ)

    예측은 리턴 길이에 맞춰 앞부분만 사용. 마지막 구간은 짧을 수 있다.
    """
    if bin_size < 1:
        raise InputError(f"bin_size는 1 이상이어야 합니다: {bin_size}")
    if not 0.0 <= gamma < 1.0:
        raise InputError(f"할인율은 [0, 1) 범위여야 합니다: {gamma}")
    pred, ret = _aligned(predictions, returns)
    if len(ret) == 0:
        raise InputError("평가할 구간이 비어 있습니다")

    starts = np.arange(0, len(ret), bin_size)
    sq = (pred - ret) ** 2
    sums = np.add.reduceat(sq, starts)
    counts = np.diff(np.append(starts, len(ret)))
    values = np.sqrt(sums / counts) * (1.0 - gamma)
    return LearningCurve(bin_size=bin_size, gamma=gamma, bins=np.arange(len(starts)), values=values)


def final_fraction_rmse(
    predictions: Sequence[float],
    returns: Sequence[float],
    gamma: float,
    fraction: float = 0.25
) -> float:
    """마지막 fraction 구간의 정규화 RMSE"""
    if not 0.0 < fraction <= 1.0:
        raise InputError(f"fraction은 (0, 1] 범위여야 합니다: {fraction}")
    pred, ret = _aligned(predictions, returns)
    start = int(len(ret) * (1.0 - fraction))
    if start >= len(ret):
        raise InputError("평가할 구간이 비어 있습니다")
    err = pred[start:] - ret[start:]
    return float(np.sqrt(np.mean(err ** 2)) * (1.0 - gamma))


def detect_events(
    signal: Sequence[float],
    threshold: float = DEFAULT_THRESHOLD,
    refractory: int = DEFAULT_REFRACTORY
) -> List[int]:
    """
    포화 시작 시점

    임계값 미만 스텝이 refractory개 이상 이어진 뒤 처음 임계값 이상이 되는 스텝.
    """
    if not 0.0 < threshold <= 1.0:
        raise InputError(f"threshold는 (0, 1] 범위여야 합니다: {threshold}")
    if refractory < 1:
        raise InputError(f"refractory는 1 이상이어야 합니다: {refractory}")

    onsets = []
    below = 0
    for t, value in enumerate(np.asarray(signal, dtype=np.float64).tolist()):
        if value >= threshold:
            if below >= refractory:
                onsets.append(t)
            below = 0
        else:
            below += 1
    return onsets


def align_events(
    onsets: Sequence[int],
    window: Tuple[int, int],
    series: Dict[str, Sequence[float]]
) -> AlignedAverage:
    """
    이벤트 정렬 평균

    모든 시계열에서 전체 창을 확보하지 못하는 이벤트는 제외하고 개수를 센다.

    Args:
        onsets: 이벤트 시작 스텝
        window: (시작 전 스텝, 시작 후 스텝)
        series: {이름: 시계열} (예: signal, return, prediction)
    """
    before, after = window
    if before < 0 or after < 0:
        raise InputError(f"창 크기는 음수일 수 없습니다: {window}")
    if not series:
        raise InputError("정렬할 시계열이 없습니다")

    arrays = {name: np.asarray(values, dtype=np.float64) for name, values in series.items()}
    limit = min(len(a) for a in arrays.values())

    kept = [t for t in onsets if t - before >= 0 and t + after < limit]
    dropped = len(onsets) - len(kept)
    if not kept:
        raise InputError(f"창을 확보한 이벤트가 없습니다 (제외 {dropped}개)")
    if dropped:
        logger.debug(f"창 밖 이벤트 {dropped}개 제외")

    offsets = np.arange(-before, after + 1)
    rows = np.asarray(kept)[:, None] + offsets[None, :]
    means = {name: a[rows].mean(axis=0) for name, a in arrays.items()}
    return AlignedAverage(before=before, after=after, event_count=len(kept), dropped=dropped, means=means)
