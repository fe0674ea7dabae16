"""
예측 뱅크 (수천 개 TD(λ) 예측 병렬 학습)
- 예측 스펙: 대상 신호 선택자 + 할인 규칙 + λ + α
- 스펙 파일 파싱/저장, 기본 스펙 생성 (센서 x 할인율, 특징 성분 샘플, 전력 예측)
- 행렬 (k x n) 기반 스텝 갱신 (지연 흔적 배율 또는 dense), 행 청크 단위 스레드 병렬
- 스텝별 소요 시간 기록 (100ms 주기 예산)
"""

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConfigurationError, InputError, NumericError
from utils.manifest import text_sha256
from .td_learner import CONSTANT, THROTTLE, DiscountRule, LearnerState

logger = logging.getLogger("nexting.horde")

SENSOR = 'sensor'
FEATURE = 'feature'
POWER = 'power'

DEFAULT_DISCOUNTS = (0.0, 0.8, 0.95, 0.9875)
CYCLE_BUDGET_MS = 100.0


def _channel_token(channel: int, channel_names: Optional[Sequence[str]]) -> str:
    return channel_names[channel] if channel_names else str(channel)


def _parse_channel(token: str, channel_names: Optional[Sequence[str]]) -> int:
    token = token.strip()
    if token.lstrip('-').isdigit():
        return int(token)
    if channel_names is not None and token in channel_names:
        return list(channel_names).index(token)
    raise ConfigurationError(f"알 수 없는 채널: '{token}'")


@dataclass(frozen=True)
class TargetSelector:
    """
    대상 신호 선택자

    sensor: 채널 값 / feature: 특징 성분 (0 또는 1) / power: Σ 전압x전류 (3개 바퀴)
    """
    kind: str
    channel: Optional[int] = None
    feature_index: Optional[int] = None
    power_channels: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind == SENSOR:
            if self.channel is None or self.channel < 0:
                raise ConfigurationError("sensor 대상에는 채널 id가 필요합니다")
        elif self.kind == FEATURE:
            if self.feature_index is None or self.feature_index < 0:
                raise ConfigurationError("feature 대상에는 특징 인덱스가 필요합니다")
        elif self.kind == POWER:
            if len(self.power_channels) != 3:
                raise ConfigurationError("power 대상에는 (전압, 전류) 채널 쌍 3개가 필요합니다")
        else:
            raise ConfigurationError(f"알 수 없는 대상 종류: {self.kind}")

    @classmethod
    def sensor(cls, channel: int) -> 'TargetSelector':
        return cls(SENSOR, channel=int(channel))

    @classmethod
    def feature(cls, index: int) -> 'TargetSelector':
        return cls(FEATURE, feature_index=int(index))

    @classmethod
    def power(cls, pairs: Sequence[Tuple[int, int]]) -> 'TargetSelector':
        return cls(POWER, power_channels=tuple((int(v), int(c)) for v, c in pairs))

    @property
    def referenced_channels(self) -> List[int]:
        if self.kind == SENSOR:
            return [self.channel]
        if self.kind == POWER:
            return [ch for pair in self.power_channels for ch in pair]
        return []

    def to_token(self, channel_names: Optional[Sequence[str]] = None) -> str:
        if self.kind == SENSOR:
            return f"{SENSOR}:{_channel_token(self.channel, channel_names)}"
        if self.kind == FEATURE:
            return f"{FEATURE}:{self.feature_index}"
        flat = ','.join(_channel_token(ch, channel_names) for ch in self.referenced_channels)
        return f"{POWER}:{flat}"

    @classmethod
    def parse(cls, token: str, channel_names: Optional[Sequence[str]] = None) -> 'TargetSelector':
        kind, _, body = token.partition(':')
        if kind == SENSOR:
            return cls.sensor(_parse_channel(body, channel_names))
        if kind == FEATURE:
            if not body.isdigit():
                raise ConfigurationError(f"feature 인덱스가 잘못되었습니다: '{token}'")
            return cls.feature(int(body))
        if kind == POWER:
            parts = [_parse_channel(p, channel_names) for p in body.split(',')]
            if len(parts) != 6:
                raise ConfigurationError(f"power 대상은 채널 6개가 필요합니다: '{token}'")
            return cls.power(list(zip(parts[0::2], parts[1::2])))
        raise ConfigurationError(f"알 수 없는 대상: '{token}'")


def parse_discount(token: str, channel_names: Optional[Sequence[str]] = None) -> DiscountRule:
    """'const:<g>' 또는 'throttle:<g>,<g_thr>,<채널>,<임계값>'"""
    kind, _, body = token.partition(':')
    try:
        if kind == CONSTANT:
            return DiscountRule.constant(float(body))
        if kind == THROTTLE:
            gamma, throttled, channel, threshold = body.split(',')
            return DiscountRule.throttle(
                float(gamma), float(throttled), _parse_channel(channel, channel_names), float(threshold)
            )
    except ValueError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"할인 규칙 형식 오류: '{token}'") from e
    raise ConfigurationError(f"알 수 없는 할인 규칙: '{token}'")


@dataclass(frozen=True)
class PredictionSpec:
    """예측 질문 하나"""
    id: int
    target: TargetSelector
    discount: DiscountRule
    lam: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"[{self.id}] lambda는 [0, 1] 범위여야 합니다: {self.lam}")
        if not self.alpha > 0.0:
            raise ConfigurationError(f"[{self.id}] alpha는 양수여야 합니다: {self.alpha}")

    def label(self, channel_names: Optional[Sequence[str]] = None) -> str:
        """프로브 식별 라벨 (대상|할인)"""
        return f"{self.target.to_token(channel_names)}|{self.discount.to_token(channel_names)}"

    def to_line(self, channel_names: Optional[Sequence[str]] = None) -> str:
        return (
            f"pred {self.id} {self.target.to_token(channel_names)} "
            f"{self.discount.to_token(channel_names)} {self.lam!r} {self.alpha!r}"
        )


def parse_spec_file(
    text: str,
    channel_names: Optional[Sequence[str]] = None,
    active_per_step: Optional[int] = None
) -> List[PredictionSpec]:
    """
    예측 스펙 텍스트 파싱

    형식: pred <id> <target> <discount> <lambda> <alpha|auto>
    """
    specs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != 'pred' or len(tokens) != 6:
            raise ConfigurationError(f"스펙 파일 {line_no}번째 줄: 'pred <id> <target> <discount> <lambda> <alpha>' 형식이 아닙니다")
        try:
            spec_id = int(tokens[1])
            lam = float(tokens[4])
            if tokens[5] == 'auto':
                if not active_per_step:
                    raise ConfigurationError("alpha auto에는 active_per_step이 필요합니다")
                alpha = 0.1 / active_per_step
            else:
                alpha = float(tokens[5])
            specs.append(PredictionSpec(
                id=spec_id,
                target=TargetSelector.parse(tokens[2], channel_names),
                discount=parse_discount(tokens[3], channel_names),
                lam=lam,
                alpha=alpha,
            ))
        except ConfigurationError as e:
            raise ConfigurationError(f"스펙 파일 {line_no}번째 줄: {e}") from e
        except ValueError as e:
            raise ConfigurationError(f"스펙 파일 {line_no}번째 줄: 숫자 형식 오류") from e
    return specs


def load_spec_file(
    path: str,
    channel_names: Optional[Sequence[str]] = None,
    active_per_step: Optional[int] = None
) -> List[PredictionSpec]:
    if not os.path.exists(path):
        raise ConfigurationError(f"스펙 파일이 없습니다: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        specs = parse_spec_file(f.read(), channel_names, active_per_step)
    logger.info(f"예측 스펙 로드: {path} ({len(specs):,}개)")
    return specs


def format_specs(specs: Sequence[PredictionSpec], channel_names: Optional[Sequence[str]] = None) -> str:
    return ''.join(spec.to_line(channel_names) + '\n' for spec in specs)


def write_spec_file(
    specs: Sequence[PredictionSpec],
    path: str,
    channel_names: Optional[Sequence[str]] = None
) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(format_specs(specs, channel_names))
    return path


def spec_hash(specs: Sequence[PredictionSpec]) -> str:
    """채널 id 기준 정규화 스펙 해시"""
    return text_sha256(format_specs(specs))


def default_specs(
    channel_names: Sequence[str],
    n: int,
    alpha: float,
    lam: float = 0.9,
    discounts: Sequence[float] = DEFAULT_DISCOUNTS,
    feature_targets: int = 487,
    feature_seed: int = 0,
    power: bool = True,
    throttle: Tuple[float, float, float] = (0.95, 0.1, 1.0),
    light_channel: str = 'light'
) -> List[PredictionSpec]:
    """
    기본 예측 스펙 생성

    1. 모든 채널 x 할인율
    2. 특징 성분 feature_targets개 (seed 고정, 비복원 추출) x 할인율
    3. 전력 예측 (빛 포화 시 γ 0.95 → 0.1), 해당 채널이 있을 때만
    """
    specs: List[PredictionSpec] = []

    def add(target: TargetSelector, discount: DiscountRule):
        specs.append(PredictionSpec(len(specs), target, discount, lam, alpha))

    for channel in range(len(channel_names)):
        for gamma in discounts:
            add(TargetSelector.sensor(channel), DiscountRule.constant(gamma))

    count = min(feature_targets, n)
    if count < feature_targets:
        logger.warning(f"특징 차원({n})이 요청한 특징 대상 수({feature_targets})보다 작습니다")
    rng = np.random.default_rng(feature_seed)
    for index in rng.choice(n, size=count, replace=False):
        for gamma in discounts:
            add(TargetSelector.feature(int(index)), DiscountRule.constant(gamma))

    if power:
        names = list(channel_names)
        wanted = [(f'motor_voltage{i}', f'motor_current{i}') for i in range(3)]
        if all(v in names and c in names for v, c in wanted) and light_channel in names:
            gamma, throttled, threshold = throttle
            add(
                TargetSelector.power([(names.index(v), names.index(c)) for v, c in wanted]),
                DiscountRule.throttle(gamma, throttled, names.index(light_channel), threshold),
            )
        else:
            logger.warning("전압/전류/빛 채널이 없어 전력 예측을 생략합니다")

    return specs


def default_probe_ids(
    specs: Sequence[PredictionSpec],
    channel_names: Sequence[str],
    light_channel: str = 'light'
) -> List[int]:
    """기본 프로브: 빛 센서 예측 전부 + 전력 예측"""
    light = list(channel_names).index(light_channel) if light_channel in channel_names else None
    return [
        spec.id for spec in specs
        if (spec.target.kind == SENSOR and spec.target.channel == light) or spec.target.kind == POWER
    ]


def select_probes(
    specs: Sequence[PredictionSpec],
    selectors: Sequence[str],
    channel_names: Optional[Sequence[str]] = None
) -> List[int]:
    """프로브 선택 (id 또는 '대상|할인' 라벨)"""
    by_label = {spec.label(channel_names): spec.id for spec in specs}
    ids = {spec.id for spec in specs}
    selected = []
    for selector in selectors:
        if selector.isdigit() and int(selector) in ids:
            selected.append(int(selector))
        elif selector in by_label:
            selected.append(by_label[selector])
        else:
            raise ConfigurationError(f"프로브를 찾을 수 없습니다: '{selector}'")
    return selected


def parse_label(label: str, channel_names: Optional[Sequence[str]] = None) -> Tuple[TargetSelector, DiscountRule]:
    """'대상|할인' 라벨 → (선택자, 할인 규칙)"""
    target, sep, discount = label.partition('|')
    if not sep:
        raise ConfigurationError(f"프로브 라벨 형식 오류: '{label}'")
    return TargetSelector.parse(target, channel_names), parse_discount(discount, channel_names)


def target_series(target: TargetSelector, channels: np.ndarray, idx: Optional[np.ndarray] = None) -> np.ndarray:
    """로그 전체의 대상 신호 시계열 (N,)"""
    if target.kind == SENSOR:
        return channels[:, target.channel].copy()
    if target.kind == FEATURE:
        if idx is None:
            raise InputError("feature 대상에는 특징 인덱스 행렬이 필요합니다")
        return (idx == target.feature_index).any(axis=1).astype(np.float64)
    total = np.zeros(len(channels))
    for v, c in target.power_channels:
        total = total + channels[:, v] * channels[:, c]
    return total


def gamma_series(discount: DiscountRule, channels: np.ndarray) -> np.ndarray:
    """로그 전체의 할인율 시계열 (N,)"""
    if discount.is_constant:
        return np.full(len(channels), discount.gamma)
    hit = channels[:, discount.trigger_channel] >= discount.trigger_threshold
    return np.where(hit, discount.throttled_gamma, discount.gamma)


def resolve_target(spec: PredictionSpec, frame, fv) -> float:
    """스텝의 대상 신호 값"""
    target = spec.target
    if target.kind == SENSOR:
        return float(frame.channels[target.channel])
    if target.kind == FEATURE:
        return 1.0 if target.feature_index in fv else 0.0
    return float(sum(frame.channels[v] * frame.channels[c] for v, c in target.power_channels))


def resolve_gamma(spec: PredictionSpec, frame) -> float:
    """스텝의 할인율"""
    return spec.discount.resolve(frame.channels)


TRACE_LAZY = 'lazy'
TRACE_DENSE = 'dense'
TRACE_MODES = (TRACE_LAZY, TRACE_DENSE)

# 지연 배율 β가 이보다 작아지면 행을 접는다 (z 성분 크기 제한)
FOLD_FLOOR = 1e-3


def trace_scaled_alpha(
    alpha: np.ndarray,
    gamma_max: np.ndarray,
    spec_lam: np.ndarray,
    lam: np.ndarray
) -> np.ndarray:
    """
    λ를 덮어쓸 때의 step size

    흔적 성분 상한 1/(1-γλ)이 커지는 만큼 α를 줄인다 (작아지면 그대로).
    """
    ratio = (1.0 - gamma_max * lam) / (1.0 - gamma_max * spec_lam)
    return alpha * np.minimum(1.0, ratio)


class PredictionBank:
    """
    예측 뱅크

    행 i는 id i 예측의 학습 상태. 행 청크는 작업자 수와 무관하게 고정되어
    결과가 작업자 수에 대해 비트 단위로 같다.

    trace_mode:
        'dense': theta, trace (k, n) 행렬을 매 스텝 전부 갱신
        'lazy': θ = u + S·z, e = β·z 로 두고 활성 인덱스만 갱신.
            β가 FOLD_FLOOR 아래로 내려가거나 감쇠가 0인 행만 접는다.
            dense와 부동소수점 오차 범위에서 같다.
    """

    def __init__(
        self,
        specs: Sequence[PredictionSpec],
        n: int,
        workers: int = 1,
        chunk_rows: int = 48,
        lambda_override: Optional[float] = None,
        trace_mode: str = TRACE_LAZY,
        scale_alpha: bool = False
    ):
        if n < 1:
            raise ConfigurationError(f"특징 차원은 1 이상이어야 합니다: {n}")
        if workers < 1:
            raise ConfigurationError(f"작업자 수는 1 이상이어야 합니다: {workers}")
        if lambda_override is not None and not 0.0 <= lambda_override <= 1.0:
            raise ConfigurationError(f"lambda는 [0, 1] 범위여야 합니다: {lambda_override}")
        if trace_mode not in TRACE_MODES:
            raise ConfigurationError(f"trace_mode는 {TRACE_MODES} 중 하나여야 합니다: {trace_mode}")

        self.specs: List[PredictionSpec] = list(specs)
        self.n = n
        self.k = len(self.specs)
        self.workers = workers
        self.chunk_rows = max(1, chunk_rows)
        self.lambda_override = lambda_override
        self.trace_mode = trace_mode
        self.scale_alpha = scale_alpha
        self.ids = np.array([s.id for s in self.specs], dtype=np.int64)

        # dense 모드에서는 S = 0, β = 1 로 고정되어 u = θ, z = e
        self._u = np.zeros((self.k, n))
        self._z = np.zeros((self.k, n))
        self._scale = np.zeros(self.k)
        self._beta = np.ones(self.k)
        self._fresh = np.ones(self.k, dtype=bool)
        self._last_active = np.zeros(0, dtype=np.int64)
        self.cycle_stats: List[float] = []
        self.folds = 0

        self._compile()

        self._pred = np.zeros(self.k)
        self._delta = np.zeros(self.k)

        chunks = [(lo, min(lo + self.chunk_rows, self.k)) for lo in range(0, self.k, self.chunk_rows)]
        groups = np.array_split(np.arange(len(chunks)), min(workers, max(len(chunks), 1)))
        self._groups = [[chunks[i] for i in group] for group in groups if len(group)]
        width = n if trace_mode == TRACE_DENSE else 0
        self._buffers = [np.empty((self.chunk_rows, width)) for _ in self._groups]
        self._fold_counts = [0] * len(self._groups)
        self._executor: Optional[ThreadPoolExecutor] = None

        logger.info(
            f"예측 뱅크 생성: {self.k:,}개 x n={n:,} "
            f"({self.memory_bytes / 1024 ** 2:.0f}MB, 작업자 {workers}, {trace_mode})"
        )

    def _compile(self) -> None:
        """스펙 → 대상/할인 해석용 배열"""
        kinds = [s.target.kind for s in self.specs]
        self._sensor_rows = np.array([i for i, k in enumerate(kinds) if k == SENSOR], dtype=np.int64)
        self._sensor_ch = np.array([self.specs[i].target.channel for i in self._sensor_rows], dtype=np.int64)
        self._feature_rows = np.array([i for i, k in enumerate(kinds) if k == FEATURE], dtype=np.int64)
        self._feature_idx = np.array([self.specs[i].target.feature_index for i in self._feature_rows], dtype=np.int64)
        self._power_rows = np.array([i for i, k in enumerate(kinds) if k == POWER], dtype=np.int64)
        pairs = np.array(
            [self.specs[i].target.power_channels for i in self._power_rows], dtype=np.int64
        ).reshape(-1, 3, 2)
        self._power_v = pairs[:, :, 0]
        self._power_c = pairs[:, :, 1]

        self._gamma = np.array([s.discount.gamma for s in self.specs], dtype=np.float64)
        self._throttle_rows = np.array([i for i, s in enumerate(self.specs) if not s.discount.is_constant], dtype=np.int64)
        self._throttle_gamma = np.array([self.specs[i].discount.throttled_gamma for i in self._throttle_rows], dtype=np.float64)
        self._trigger_ch = np.array([self.specs[i].discount.trigger_channel for i in self._throttle_rows], dtype=np.int64)
        self._trigger_thr = np.array([self.specs[i].discount.trigger_threshold for i in self._throttle_rows], dtype=np.float64)

        spec_lam = np.array([s.lam for s in self.specs], dtype=np.float64)
        self.lam = spec_lam if self.lambda_override is None else np.full(self.k, float(self.lambda_override))
        self.alpha = np.array([s.alpha for s in self.specs], dtype=np.float64)
        if self.scale_alpha and self.lambda_override is not None and self.k:
            gamma_max = self._gamma.copy()
            if len(self._throttle_rows):
                gamma_max[self._throttle_rows] = np.maximum(gamma_max[self._throttle_rows], self._throttle_gamma)
            self.alpha = trace_scaled_alpha(self.alpha, gamma_max, spec_lam, self.lam)

    @property
    def memory_bytes(self) -> int:
        """가중치/흔적 행렬과 행별 상태가 차지하는 바이트"""
        arrays = (self._u, self._z, self._scale, self._beta, self._fresh, self.alpha, self.lam)
        return int(sum(a.nbytes for a in arrays) + sum(b.nbytes for b in self._buffers))

    # ------------------------------------------------------------------
    # 대상/할인 해석

    def targets(self, channels: np.ndarray, active: np.ndarray) -> np.ndarray:
        """모든 스펙의 대상 신호 (k,)"""
        r = np.empty(self.k)
        if len(self._sensor_rows):
            r[self._sensor_rows] = channels[self._sensor_ch]
        if len(self._feature_rows):
            mask = np.zeros(self.n, dtype=bool)
            mask[active] = True
            r[self._feature_rows] = mask[self._feature_idx]
        if len(self._power_rows):
            r[self._power_rows] = (channels[self._power_v] * channels[self._power_c]).sum(axis=1)
        return r

    def gammas(self, channels: np.ndarray) -> np.ndarray:
        """모든 스펙의 할인율 (k,)"""
        g = self._gamma.copy()
        if len(self._throttle_rows):
            hit = channels[self._trigger_ch] >= self._trigger_thr
            g[self._throttle_rows] = np.where(hit, self._throttle_gamma, self._gamma[self._throttle_rows])
        return g

    # ------------------------------------------------------------------
    # 학습

    def _update_dense(self, g, group, buf, idx_prev, idx_next, reward, gamma_next, decay) -> None:
        for lo, hi in group:
            th = self._u[lo:hi]
            tr = self._z[lo:hi]

            tr *= decay[lo:hi, None]
            tr[:, idx_prev] += 1.0

            v_prev = th[:, idx_prev].sum(axis=1)
            v_next = th[:, idx_next].sum(axis=1)
            delta = reward[lo:hi] + gamma_next[lo:hi] * v_next - v_prev

            step_buf = buf[:hi - lo]
            np.multiply(tr, (self.alpha[lo:hi] * delta)[:, None], out=step_buf)
            th += step_buf

            self._delta[lo:hi] = delta
            self._pred[lo:hi] = th[:, idx_next].sum(axis=1)

    @staticmethod
    def _fold(u, z, scale, beta, rows) -> None:
        """행 rows의 지연 항을 u로 옮김 (S = 0, β = 1, z = e)"""
        u[rows] += scale[rows, None] * z[rows]
        z[rows] *= beta[rows, None]
        scale[rows] = 0.0
        beta[rows] = 1.0

    def _update_lazy(self, g, group, buf, idx_prev, idx_next, reward, gamma_next, decay) -> None:
        last = self._last_active
        for lo, hi in group:
            u = self._u[lo:hi]
            z = self._z[lo:hi]
            scale = self._scale[lo:hi]
            beta = self._beta[lo:hi]
            fresh = self._fresh[lo:hi]
            d = decay[lo:hi]

            # 감쇠 0: 흔적을 비운다. 직전에도 비웠던 행은 직전 활성 열만 남아 있다.
            reset = d == 0.0
            if reset.any():
                sparse_rows = np.flatnonzero(reset & fresh)
                if len(sparse_rows) and len(last):
                    cols = np.ix_(sparse_rows, last)
                    u[cols] += scale[sparse_rows, None] * z[cols]
                    z[cols] = 0.0
                dense_rows = np.flatnonzero(reset & ~fresh)
                if len(dense_rows):
                    u[dense_rows] += scale[dense_rows, None] * z[dense_rows]
                    z[dense_rows] = 0.0
                    self._fold_counts[g] += len(dense_rows)
                scale[reset] = 0.0
                beta[reset] = 1.0

            new_beta = np.where(reset, 1.0, beta * d)
            small = np.flatnonzero(~reset & (new_beta < FOLD_FLOOR))
            if len(small):
                self._fold(u, z, scale, beta, small)
                new_beta[small] = d[small]
                self._fold_counts[g] += len(small)

            s = scale[:, None]
            v_prev = (u[:, idx_prev] + s * z[:, idx_prev]).sum(axis=1)
            v_next = (u[:, idx_next] + s * z[:, idx_next]).sum(axis=1)
            delta = reward[lo:hi] + gamma_next[lo:hi] * v_next - v_prev

            # e_t = d·e_{t-1} + φ_t, θ 불변
            inc = 1.0 / new_beta
            z[:, idx_prev] += inc[:, None]
            u[:, idx_prev] -= (scale * inc)[:, None]
            beta[:] = new_beta
            fresh[:] = reset

            # θ += αδ·e_t
            scale += self.alpha[lo:hi] * delta * new_beta

            self._delta[lo:hi] = delta
            s = scale[:, None]
            self._pred[lo:hi] = (u[:, idx_next] + s * z[:, idx_next]).sum(axis=1)

    def step(
        self,
        idx_prev: np.ndarray,
        idx_next: np.ndarray,
        channels_prev: np.ndarray,
        channels_next: np.ndarray,
        step: Optional[int] = None
    ) -> np.ndarray:
        """
        한 스텝 갱신 (모든 예측)

        Returns:
            갱신 후 φ_{t+1}에 대한 예측 (k,)
        """
        started = time.perf_counter()
        if self.k == 0:
            self.cycle_stats.append(time.perf_counter() - started)
            return np.zeros(0)

        reward = self.targets(channels_next, idx_next)
        if not np.isfinite(reward).all():
            row = int(np.flatnonzero(~np.isfinite(reward))[0])
            raise NumericError("보상이 유한하지 않습니다", prediction_id=int(self.ids[row]), step=step)

        decay = self.gammas(channels_prev) * self.lam
        gamma_next = self.gammas(channels_next)
        update = self._update_lazy if self.trace_mode == TRACE_LAZY else self._update_dense

        if len(self._groups) == 1:
            update(0, self._groups[0], self._buffers[0], idx_prev, idx_next, reward, gamma_next, decay)
        else:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=len(self._groups), thread_name_prefix="horde")
            futures = [
                self._executor.submit(update, g, group, buf, idx_prev, idx_next, reward, gamma_next, decay)
                for g, (group, buf) in enumerate(zip(self._groups, self._buffers))
            ]
            for future in futures:
                future.result()
        self._last_active = np.asarray(idx_prev, dtype=np.int64).copy()

        finite = np.isfinite(self._delta) & np.isfinite(self._pred)
        if not finite.all():
            row = int(np.flatnonzero(~finite)[0])
            raise NumericError("가중치가 발산했습니다", prediction_id=int(self.ids[row]), step=step)

        self.cycle_stats.append(time.perf_counter() - started)
        return self._pred.copy()

    def sync(self) -> None:
        """지연 항을 모두 접어 u = θ, z = e 로 만든다"""
        for lo in range(0, self.k, self.chunk_rows):
            hi = min(lo + self.chunk_rows, self.k)
            scale = self._scale[lo:hi]
            beta = self._beta[lo:hi]
            rows = np.flatnonzero((scale != 0.0) | (beta != 1.0))
            if len(rows):
                self._fold(self._u[lo:hi], self._z[lo:hi], scale, beta, rows)
        self.folds = sum(self._fold_counts)

    @property
    def theta(self) -> np.ndarray:
        """(k, n) 가중치"""
        self.sync()
        return self._u

    @property
    def trace(self) -> np.ndarray:
        """(k, n) 적격 흔적"""
        self.sync()
        return self._z

    def predict(self, active: np.ndarray) -> np.ndarray:
        """현재 가중치의 예측 (k,)"""
        if self.k == 0:
            return np.zeros(0)
        return (self._u[:, active] + self._scale[:, None] * self._z[:, active]).sum(axis=1)

    def reset_traces(self) -> None:
        self.sync()
        self._z[:] = 0.0
        self._fresh[:] = True

    def check_finite(self, step: Optional[int] = None) -> None:
        """전체 가중치 유한성 검사"""
        bad = ~np.isfinite(self.theta).all(axis=1)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise NumericError("가중치에 유한하지 않은 값이 있습니다", prediction_id=int(self.ids[row]), step=step)

    @property
    def states(self) -> List[LearnerState]:
        """예측별 LearnerState (접은 뒤의 뱅크 행렬 뷰, 다음 step 전까지 유효)"""
        theta, trace = self.theta, self.trace
        return [
            LearnerState(theta=theta[i], trace=trace[i], last_prediction=float(self._pred[i]),
                         last_delta=float(self._delta[i]))
            for i in range(self.k)
        ]

    def cycle_summary(self, budget_ms: float = CYCLE_BUDGET_MS) -> Dict[str, float]:
        """스텝 소요 시간 요약 (ms)"""
        if not self.cycle_stats:
            return {'steps': 0}
        ms = np.array(self.cycle_stats) * 1000.0
        return {
            'steps': int(len(ms)),
            'median_ms': round(float(np.median(ms)), 3),
            'p99_ms': round(float(np.percentile(ms, 99)), 3),
            'max_ms': round(float(ms.max()), 3),
            'mean_ms': round(float(ms.mean()), 3),
            'over_budget': int((ms > budget_ms).sum()),
            'budget_ms': float(budget_ms),
        }

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> 'PredictionBank':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def build_bank(
    specs: Sequence[PredictionSpec],
    n: int,
    n_channels: Optional[int] = None,
    workers: int = 1,
    lambda_override: Optional[float] = None,
    chunk_rows: int = 48,
    trace_mode: str = TRACE_LAZY,
    scale_alpha: bool = False
) -> PredictionBank:
    """
    예측 뱅크 생성 (가중치/흔적 0 초기화)

    scale_alpha: λ를 덮어쓸 때 흔적 상한 비율로 α를 줄임 (trace_scaled_alpha)

    Raises:
        ConfigurationError: id가 0..k-1이 아니거나 선택자가 범위를 벗어날 때
    """
    ordered = sorted(specs, key=lambda s: s.id)
    ids = [s.id for s in ordered]
    if ids != list(range(len(ordered))):
        raise ConfigurationError("예측 스펙 id는 0부터 빈틈없이 유일해야 합니다")

    for spec in ordered:
        if spec.target.kind == FEATURE and spec.target.feature_index >= n:
            raise ConfigurationError(f"[{spec.id}] 특징 인덱스 {spec.target.feature_index}가 n={n} 범위 밖입니다")
        if n_channels is not None:
            channels = list(spec.target.referenced_channels)
            if not spec.discount.is_constant:
                channels.append(spec.discount.trigger_channel)
            if any(ch >= n_channels for ch in channels):
                raise ConfigurationError(f"[{spec.id}] 채널 id가 프레임 폭({n_channels})을 벗어났습니다")

    return PredictionBank(
        ordered, n, workers=workers, chunk_rows=chunk_rows, lambda_override=lambda_override,
        trace_mode=trace_mode, scale_alpha=scale_alpha,
    )


def bank_step(bank: PredictionBank, fv_prev, fv_next, frame_prev, frame_next) -> Tuple[np.ndarray, float]:
    """
    뱅크 한 스텝

    Returns:
        (갱신 후 예측 (k,), 스텝 소요 시간 초)
    """
    if fv_prev.n != bank.n or fv_next.n != bank.n:
        raise InputError(f"특징 차원 불일치: 뱅크 n={bank.n}")
    predictions = bank.step(
        fv_prev.active_indices,
        fv_next.active_indices,
        np.asarray(frame_prev.channels, dtype=np.float64),
        np.asarray(frame_next.channels, dtype=np.float64),
        step=frame_next.step,
    )
    return predictions, bank.cycle_stats[-1]
