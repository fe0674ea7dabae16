"""
선형 TD(λ) 학습기
- 가중치 θ, 누적 적격 흔적(trace) e (dense)
- 상수 / 상태 의존 할인율
- 갱신 후 비유한 값 검출 (예측 id, 스텝 포함)
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from utils.errors import ConfigurationError, InputError, NumericError

logger = logging.getLogger("nexting.td_learner")

CONSTANT = 'const'
THROTTLE = 'throttle'


def _check_gamma(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value < 1.0:
        raise ConfigurationError(f"{name}는 [0, 1) 범위여야 합니다: {value}")
    return value


@dataclass(frozen=True)
class DiscountRule:
    """
    할인율 규칙

    const: 항상 gamma
    throttle: trigger 채널 값 ≥ threshold 이면 throttled_gamma, 아니면 gamma
    """
    kind: str
    gamma: float
    throttled_gamma: Optional[float] = None
    trigger_channel: Optional[int] = None
    trigger_threshold: Optional[float] = None

    def __post_init__(self):
        _check_gamma(self.gamma, 'gamma')
        if self.kind == CONSTANT:
            return
        if self.kind != THROTTLE:
            raise ConfigurationError(f"알 수 없는 할인 규칙: {self.kind}")
        if None in (self.throttled_gamma, self.trigger_channel, self.trigger_threshold):
            raise ConfigurationError("throttle 규칙에는 throttled_gamma, 채널, 임계값이 필요합니다")
        _check_gamma(self.throttled_gamma, 'throttled_gamma')
        if not 0.0 <= self.trigger_threshold <= 1.0:
            raise ConfigurationError(f"임계값은 [0, 1] 범위여야 합니다: {self.trigger_threshold}")

    @classmethod
    def constant(cls, gamma: float) -> 'DiscountRule':
        return cls(CONSTANT, float(gamma))

    @classmethod
    def throttle(cls, gamma: float, throttled_gamma: float, channel: int, threshold: float) -> 'DiscountRule':
        return cls(THROTTLE, float(gamma), float(throttled_gamma), int(channel), float(threshold))

    @property
    def is_constant(self) -> bool:
        return self.kind == CONSTANT

    @property
    def max_gamma(self) -> float:
        if self.is_constant:
            return self.gamma
        return max(self.gamma, self.throttled_gamma)

    def resolve(self, channels: Sequence[float]) -> float:
        """프레임 채널 값 → 이 스텝의 할인율"""
        if self.is_constant:
            return self.gamma
        if channels[self.trigger_channel] >= self.trigger_threshold:
            return self.throttled_gamma
        return self.gamma

    def to_token(self, channel_names: Optional[Sequence[str]] = None) -> str:
        if self.is_constant:
            return f"{CONSTANT}:{self.gamma!r}"
        channel = channel_names[self.trigger_channel] if channel_names else str(self.trigger_channel)
        return f"{THROTTLE}:{self.gamma!r},{self.throttled_gamma!r},{channel},{self.trigger_threshold!r}"


@dataclass
class LearnerState:
    """예측 하나의 학습 상태"""
    theta: np.ndarray
    trace: np.ndarray
    last_prediction: float = 0.0
    last_delta: float = 0.0

    @classmethod
    def zeros(cls, n: int) -> 'LearnerState':
        if n < 1:
            raise ConfigurationError(f"특징 차원은 1 이상이어야 합니다: {n}")
        return cls(theta=np.zeros(n), trace=np.zeros(n))

    @property
    def n(self) -> int:
        return len(self.theta)


def _active(fv, n: int) -> np.ndarray:
    if fv.n != n:
        raise InputError(f"특징 차원 불일치: 특징 {fv.n}, 가중치 {n}")
    return fv.active_indices


def predict(state: LearnerState, fv) -> float:
    """v = θᵀφ (이진 특징 → 활성 인덱스 가중치 합)"""
    return float(state.theta[_active(fv, state.n)].sum())


def td_step(
    state: LearnerState,
    fv_prev,
    fv_next,
    reward: float,
    gamma_prev: float,
    gamma_next: float,
    lam: float,
    alpha: float,
    prediction_id: Optional[int] = None,
    step: Optional[int] = None
) -> LearnerState:
    """
    TD(λ) 한 스텝 (제자리 갱신)

    e ← γ_t·λ·e + φ_t
    δ = r + γ_{t+1}·θᵀφ_{t+1} − θᵀφ_t   (갱신 전 θ)
    θ ← θ + α·δ·e
    """
    idx_prev = _active(fv_prev, state.n)
    idx_next = _active(fv_next, state.n)
    _check_gamma(gamma_prev, 'gamma_prev')
    _check_gamma(gamma_next, 'gamma_next')
    if not 0.0 <= lam <= 1.0:
        raise ConfigurationError(f"lambda는 [0, 1] 범위여야 합니다: {lam}")
    if not alpha > 0.0:
        raise ConfigurationError(f"alpha는 양수여야 합니다: {alpha}")
    if not math.isfinite(reward):
        raise NumericError(f"보상이 유한하지 않습니다: {reward}", prediction_id=prediction_id, step=step)

    state.trace *= gamma_prev * lam
    state.trace[idx_prev] += 1.0

    v_prev = state.theta[idx_prev].sum()
    v_next = state.theta[idx_next].sum()
    delta = reward + gamma_next * v_next - v_prev

    state.theta += (alpha * delta) * state.trace

    if not math.isfinite(delta) or not np.isfinite(state.theta).all():
        raise NumericError(f"가중치가 발산했습니다 (δ={delta})", prediction_id=prediction_id, step=step)

    state.last_delta = float(delta)
    state.last_prediction = float(state.theta[idx_next].sum())
    return state


def reset_traces(state: LearnerState) -> LearnerState:
    """흔적만 0으로 (θ 유지)"""
    state.trace[:] = 0.0
    return state
