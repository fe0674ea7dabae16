"""
타일 코딩 특징 생성기 (v1.0)
- 1차원 / 쌍(2차원) 타일링, 랜덤 오프셋 (Philox 카운터 기반 생성기)
- 인덱스 배치: bias = 0, 이후 스펙 순서대로 타일링 블록
- 프레임 → 고정 개수 희소 이진 특징 벡터
- 로그 전체 배치 인코딩 (N x active 인덱스 행렬)
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import ConfigurationError, InputError
from utils.manifest import text_sha256

logger = logging.getLogger("nexting.tile_coder")

KIND_1D = 'tile1d'
KIND_2D = 'tile2d'
BIAS_INDEX = 0


@dataclass(frozen=True)
class TilingSpec:
    """타일링 스펙 한 줄 (1차원 또는 채널 쌍)"""
    kind: str
    channel_a: int
    intervals: int
    tilings: int
    offset_seed: int
    channel_b: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (KIND_1D, KIND_2D):
            raise ConfigurationError(f"알 수 없는 타일링 종류: {self.kind}")
        if self.kind == KIND_2D and self.channel_b is None:
            raise ConfigurationError("tile2d 스펙에는 두 번째 채널이 필요합니다")
        if self.kind == KIND_1D and self.channel_b is not None:
            raise ConfigurationError("tile1d 스펙에는 채널이 하나만 필요합니다")
        if self.intervals < 1 or self.tilings < 1:
            raise ConfigurationError(
                f"intervals/tilings는 1 이상이어야 합니다: {self.intervals}, {self.tilings}"
            )
        if self.offset_seed < 0:
            raise ConfigurationError(f"offset seed는 음수일 수 없습니다: {self.offset_seed}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == KIND_1D else 2

    @property
    def channels(self) -> Tuple[int, ...]:
        return (self.channel_a,) if self.kind == KIND_1D else (self.channel_a, self.channel_b)

    @property
    def cells(self) -> int:
        """타일링 하나의 셀 수"""
        return self.intervals ** self.dim

    @property
    def size(self) -> int:
        return self.tilings * self.cells

    @property
    def key(self) -> Tuple:
        """중복 판정 키 (종류, 채널, seed)"""
        return (self.kind, self.channels, self.offset_seed)

    def offsets(self) -> np.ndarray:
        """(tilings, dim) 오프셋, 각 값 [0, 1/intervals)"""
        rng = np.random.Generator(np.random.Philox(key=self.offset_seed))
        return rng.random((self.tilings, self.dim)) / self.intervals

    def to_line(self) -> str:
        channels = ' '.join(str(c) for c in self.channels)
        return f"{self.kind} {channels} {self.intervals} {self.tilings} {self.offset_seed}"


@dataclass(frozen=True)
class FeatureVector:
    """희소 이진 특징 벡터 (활성 인덱스, 오름차순)"""
    active_indices: np.ndarray
    n: int

    def __post_init__(self):
        idx = np.asarray(self.active_indices, dtype=np.int64)
        if idx.ndim != 1:
            raise InputError("활성 인덱스는 1차원이어야 합니다")
        if len(idx):
            if idx[0] < 0 or idx[-1] >= self.n:
                raise InputError(f"활성 인덱스가 [0, {self.n}) 범위 밖입니다")
            if len(idx) > 1 and not (np.diff(idx) > 0).all():
                raise InputError("활성 인덱스는 중복 없이 오름차순이어야 합니다")
        object.__setattr__(self, 'active_indices', idx)

    def __len__(self) -> int:
        return len(self.active_indices)

    def __contains__(self, index: int) -> bool:
        pos = np.searchsorted(self.active_indices, index)
        return bool(pos < len(self.active_indices) and self.active_indices[pos] == index)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.n)
        dense[self.active_indices] = 1.0
        return dense


def tile_index_1d(value: float, intervals: int, offset: float) -> int:
    """
    값 하나의 구간 인덱스

    clamp(floor((value + offset) * intervals), 0, intervals - 1)
    """
    if not 0.0 <= value <= 1.0:
        raise InputError(f"센서 값은 [0, 1] 범위여야 합니다: {value}")
    if intervals < 1:
        raise ConfigurationError(f"intervals는 1 이상이어야 합니다: {intervals}")
    if not 0.0 <= offset < 1.0 / intervals:
        raise InputError(f"오프셋은 [0, 1/intervals) 범위여야 합니다: {offset}")
    index = int(np.floor((value + offset) * intervals))
    return min(max(index, 0), intervals - 1)


class TileCoder:
    """
    타일 코더

    생성 후 불변. encode는 여러 스레드에서 동시에 호출해도 안전하다.
    """

    def __init__(self, specs: Sequence[TilingSpec], n_channels: Optional[int] = None):
        self.specs: Tuple[TilingSpec, ...] = tuple(specs)
        self.n_channels = n_channels

        seen = set()
        for spec in self.specs:
            if spec.key in seen:
                raise ConfigurationError(f"중복 타일링 스펙: {spec.to_line()}")
            seen.add(spec.key)
            if n_channels is not None and max(spec.channels) >= n_channels:
                raise ConfigurationError(
                    f"채널 id가 프레임 폭({n_channels})을 벗어났습니다: {spec.to_line()}"
                )
            if min(spec.channels) < 0:
                raise ConfigurationError(f"채널 id는 음수일 수 없습니다: {spec.to_line()}")

        if not self.specs:
            logger.warning("타일링 스펙이 없습니다: bias 특징만 사용합니다")

        # 타일링 단위 배열 (T = 전체 타일링 수)
        chan_a, chan_b, offs_a, offs_b, intervals, bases, pairs = [], [], [], [], [], [], []
        base = 1
        self._layout: List[Dict] = []
        for spec in self.specs:
            offsets = spec.offsets()
            self._layout.append({
                'spec': spec.to_line(), 'base': base, 'size': spec.size, 'tilings': spec.tilings,
            })
            for t in range(spec.tilings):
                chan_a.append(spec.channel_a)
                chan_b.append(spec.channel_b if spec.dim == 2 else spec.channel_a)
                offs_a.append(offsets[t, 0])
                offs_b.append(offsets[t, 1] if spec.dim == 2 else 0.0)
                intervals.append(spec.intervals)
                bases.append(base + t * spec.cells)
                pairs.append(spec.dim == 2)
            base += spec.size

        self.n = base
        self.active_per_step = 1 + len(bases)
        self._chan_a = np.array(chan_a, dtype=np.int64)
        self._chan_b = np.array(chan_b, dtype=np.int64)
        self._off_a = np.array(offs_a, dtype=np.float64)
        self._off_b = np.array(offs_b, dtype=np.float64)
        self._intervals = np.array(intervals, dtype=np.int64)
        self._bases = np.array(bases, dtype=np.int64)
        self._pairs = np.array(pairs, dtype=bool)

        for arr in (self._chan_a, self._chan_b, self._off_a, self._off_b,
                    self._intervals, self._bases, self._pairs):
            arr.setflags(write=False)

        logger.debug(f"타일 코더 생성: 스펙 {len(self.specs)}개, n={self.n}, active={self.active_per_step}")

    @property
    def min_channels(self) -> int:
        """필요한 최소 프레임 폭"""
        if not self.specs:
            return 0
        return int(max(max(s.channels) for s in self.specs)) + 1

    @property
    def config_hash(self) -> str:
        """스펙 목록의 정규화 해시 (주석/공백 무관)"""
        return text_sha256('\n'.join(spec.to_line() for spec in self.specs))

    def describe(self) -> List[Dict]:
        """스펙별 인덱스 배치 (매니페스트용)"""
        return [dict(row) for row in self._layout]

    def _check_width(self, width: int) -> None:
        if self.n_channels is not None and width != self.n_channels:
            raise InputError(f"프레임 폭 불일치: 기대 {self.n_channels}, 실제 {width}")
        if width < self.min_channels:
            raise InputError(f"프레임 폭({width})이 타일링이 참조하는 채널 수보다 작습니다")

    def encode_batch(self, channels: np.ndarray) -> np.ndarray:
        """
        (N, C) 채널 행렬 → (N, active_per_step) 활성 인덱스 행렬

        각 행은 오름차순 (블록 순서대로 한 셀씩 활성).
        """
        values = np.asarray(channels, dtype=np.float64)
        if values.ndim != 2:
            raise InputError("채널 행렬은 2차원이어야 합니다")
        self._check_width(values.shape[1])
        if values.size and not ((values >= 0.0) & (values <= 1.0)).all():
            raise InputError("채널 값이 [0, 1] 범위 밖입니다")

        rows = values.shape[0]
        out = np.empty((rows, self.active_per_step), dtype=np.int64)
        out[:, 0] = BIAS_INDEX
        if self.active_per_step == 1:
            return out

        top = self._intervals - 1
        ia = np.floor((values[:, self._chan_a] + self._off_a) * self._intervals).astype(np.int64)
        np.clip(ia, 0, top, out=ia)
        ib = np.floor((values[:, self._chan_b] + self._off_b) * self._intervals).astype(np.int64)
        np.clip(ib, 0, top, out=ib)

        cell = np.where(self._pairs, ia * self._intervals + ib, ia)
        out[:, 1:] = self._bases + cell
        return out

    def encode_values(self, channels: np.ndarray) -> np.ndarray:
        """채널 벡터 하나 → 활성 인덱스"""
        return self.encode_batch(np.asarray(channels, dtype=np.float64).reshape(1, -1))[0]

    def encode(self, frame) -> FeatureVector:
        """SensorFrame → FeatureVector (상태 없음)"""
        return FeatureVector(self.encode_values(frame.channels), self.n)


def build_tile_coder(specs: Sequence[TilingSpec], n_channels: Optional[int] = None) -> TileCoder:
    """타일 코더 생성 (n, active_per_step 계산 포함)"""
    return TileCoder(specs, n_channels=n_channels)


def encode_log(coder: TileCoder, log, chunk_rows: int = 20000) -> np.ndarray:
    """센서 로그 전체 배치 인코딩"""
    channels = log.channels
    if len(channels) <= chunk_rows:
        return coder.encode_batch(channels)
    parts = [coder.encode_batch(channels[i:i + chunk_rows]) for i in range(0, len(channels), chunk_rows)]
    return np.vstack(parts)


def _parse_channel(token: str, channel_names: Optional[Sequence[str]], line_no: int) -> int:
    if token.lstrip('-').isdigit():
        return int(token)
    if channel_names is not None and token in channel_names:
        return list(channel_names).index(token)
    raise ConfigurationError(f"타일링 설정 {line_no}번째 줄: 알 수 없는 채널 '{token}'")


def parse_tiling_config(text: str, channel_names: Optional[Sequence[str]] = None) -> List[TilingSpec]:
    """
    타일링 설정 텍스트 파싱

    형식:
        tile1d <channel> <intervals> <tilings> <seed>
        tile2d <chanA> <chanB> <intervals> <tilings> <seed>
        # 주석
    """
    specs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue

        tokens = line.split()
        kind = tokens[0]
        expected = {KIND_1D: 5, KIND_2D: 6}.get(kind)
        if expected is None:
            raise ConfigurationError(f"타일링 설정 {line_no}번째 줄: 알 수 없는 지시어 '{kind}'")
        if len(tokens) != expected:
            raise ConfigurationError(
                f"타일링 설정 {line_no}번째 줄: 토큰 {expected}개가 필요합니다 (실제 {len(tokens)}개)"
            )

        try:
            numbers = [int(t) for t in tokens[-3:]]
        except ValueError:
            raise ConfigurationError(f"타일링 설정 {line_no}번째 줄: 정수가 아닌 값이 있습니다")
        intervals, tilings, seed = numbers

        channel_a = _parse_channel(tokens[1], channel_names, line_no)
        channel_b = _parse_channel(tokens[2], channel_names, line_no) if kind == KIND_2D else None

        try:
            specs.append(TilingSpec(kind, channel_a, intervals, tilings, seed, channel_b))
        except ConfigurationError as e:
            raise ConfigurationError(f"타일링 설정 {line_no}번째 줄: {e}") from e

    return specs


def load_tiling_config(path: str, channel_names: Optional[Sequence[str]] = None) -> List[TilingSpec]:
    """타일링 설정 파일 로드"""
    if not os.path.exists(path):
        raise ConfigurationError(f"타일링 설정 파일이 없습니다: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        specs = parse_tiling_config(f.read(), channel_names)
    logger.info(f"타일링 설정 로드: {path} (스펙 {len(specs)}개)")
    return specs


def as_index_matrix(feature_log: Union[np.ndarray, Sequence[FeatureVector]]) -> np.ndarray:
    """
    FeatureVector 시퀀스 또는 인덱스 행렬 → (N, active) 인덱스 행렬

    Raises:
        InputError: 행마다 활성 개수가 다를 때 (as_active_rows 사용)
    """
    if isinstance(feature_log, np.ndarray):
        idx = feature_log.astype(np.int64, copy=False)
        return idx.reshape(len(idx), -1) if idx.ndim != 2 else idx
    if len(feature_log) == 0:
        return np.zeros((0, 0), dtype=np.int64)
    widths = {len(fv) for fv in feature_log}
    if len(widths) > 1:
        raise InputError(f"행마다 활성 특징 수가 다릅니다 ({min(widths)}~{max(widths)})")
    return np.vstack([fv.active_indices for fv in feature_log])


def as_active_rows(feature_log: Union[np.ndarray, Sequence[FeatureVector]]) -> Tuple[np.ndarray, np.ndarray]:
    """
    행 압축 형태 (indices, indptr)

    행 i의 활성 인덱스는 indices[indptr[i]:indptr[i+1]].
    FeatureVector 시퀀스는 행마다 활성 개수가 달라도 된다.
    """
    if isinstance(feature_log, np.ndarray):
        idx = as_index_matrix(feature_log)
        rows, width = idx.shape
        return idx.ravel(), np.arange(rows + 1, dtype=np.int64) * width

    lengths = np.fromiter((len(fv) for fv in feature_log), dtype=np.int64, count=len(feature_log))
    indptr = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    if not len(lengths):
        return np.zeros(0, dtype=np.int64), indptr
    return np.concatenate([fv.active_indices for fv in feature_log]), indptr
