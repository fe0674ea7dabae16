"""
오프라인 기준 계산기
- 이상적 리턴 G_t (가변 할인율 곱 형태, 역방향 재귀)
- 절단 지평 H: (max γ)^H ≤ eps
- 최소제곱 θ* (희소 Gram 누적 + 릿지 + 촐레스키 분해)
- 오프라인 RMSE
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from utils.errors import InputError, NumericError
from processors.tile_coder import as_active_rows

logger = logging.getLogger("nexting.oracle")

DEFAULT_EPS = 1e-6
DEFAULT_RIDGE_FACTOR = 1e-8

# 촐레스키 대각 비율이 이보다 작으면 특이 행렬로 본다 (조건수 ~1e14)
_SINGULAR_RATIO = 1e-7


@dataclass
class ReturnSeries:
    """스텝 t = 0 .. N-H-1 의 리턴"""
    values: np.ndarray
    horizon: int
    eps: float

    def __len__(self) -> int:
        return len(self.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'step': np.arange(len(self.values)), 'value': self.values})


@dataclass
class OfflineSolution:
    """최소제곱 해"""
    theta_star: np.ndarray
    ridge: float
    residual_rmse: float
    rows: int = 0
    features_used: int = 0


def _check_series(targets, gammas) -> Tuple[np.ndarray, np.ndarray]:
    r = np.asarray(targets, dtype=np.float64)
    g = np.asarray(gammas, dtype=np.float64)
    if r.shape != g.shape or r.ndim != 1:
        raise InputError(f"대상/할인 시계열 길이 불일치: {r.shape} vs {g.shape}")
    if len(g) and (not np.isfinite(g).all() or (g < 0).any() or (g >= 1).any()):
        raise InputError("할인율은 [0, 1) 범위여야 합니다 (γ ≥ 1 이면 지평이 무한)")
    if not np.isfinite(r).all():
        raise InputError("대상 신호에 유한하지 않은 값이 있습니다")
    return r, g


def discounted_returns(targets: Sequence[float], gammas: Sequence[float]) -> np.ndarray:
    """
    절단 없는 역방향 재귀

    G_t = r_{t+1} + γ_{t+1}·G_{t+1},  G_{N-1} = 0
    """
    r, g = _check_series(targets, gammas)
    count = len(r)
    out = np.zeros(count)
    if count < 2:
        return out

    r_list = r.tolist()
    g_list = g.tolist()
    values = [0.0] * count
    acc = 0.0
    for t in range(count - 2, -1, -1):
        acc = r_list[t + 1] + g_list[t + 1] * acc
        values[t] = acc
    out[:] = values
    return out


def forward_returns(targets: Sequence[float], gammas: Sequence[float]) -> np.ndarray:
    """정의대로의 전방 합 (검증용, O(N²))"""
    r, g = _check_series(targets, gammas)
    count = len(r)
    out = np.zeros(count)
    for t in range(count):
        total = 0.0
        weight = 1.0
        for k in range(count - t - 1):
            total += weight * r[t + k + 1]
            weight *= g[t + k + 1]
        out[t] = total
    return out


def return_horizon(max_gamma: float, eps: float = DEFAULT_EPS) -> int:
    """(max γ)^H ≤ eps 를 만족하는 최소 H (γ = 0 이면 1)"""
    if not 0.0 < eps < 1.0:
        raise InputError(f"eps는 (0, 1) 범위여야 합니다: {eps}")
    if not 0.0 <= max_gamma < 1.0:
        raise InputError(f"할인율은 [0, 1) 범위여야 합니다: {max_gamma}")
    if max_gamma == 0.0:
        return 1
    horizon = max(1, math.ceil(math.log(eps) / math.log(max_gamma)))
    while max_gamma ** horizon > eps:
        horizon += 1
    while horizon > 1 and max_gamma ** (horizon - 1) <= eps:
        horizon -= 1
    return horizon


def compute_returns(targets: Sequence[float], gammas: Sequence[float], eps: float = DEFAULT_EPS) -> ReturnSeries:
    """
    절단된 리턴 시계열

    마지막 H 스텝은 꼬리가 잘려 제외한다.

    Raises:
        InputError: γ ≥ 1, 로그가 지평보다 짧을 때
    """
    r, g = _check_series(targets, gammas)
    horizon = return_horizon(float(g.max()) if len(g) else 0.0, eps)
    if len(r) - horizon <= 0:
        raise InputError(f"로그 길이({len(r)})가 리턴 지평({horizon})보다 짧습니다")
    values = discounted_returns(r, g)[:len(r) - horizon]
    return ReturnSeries(values=values, horizon=horizon, eps=eps)


def _values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=np.float64)


def design_matrix(feature_log, n: Optional[int] = None) -> sparse.csr_matrix:
    """
    (N, n) 이진 설계 행렬 Φ

    feature_log: FeatureVector 시퀀스, (N, active) 인덱스 행렬 또는 CSR 행렬.
    n이 없으면 FeatureVector의 n (행렬 입력은 최대 인덱스 + 1).
    """
    if sparse.issparse(feature_log):
        design = feature_log.tocsr()
        if n is not None and design.shape[1] != n:
            raise InputError(f"특징 차원 불일치: {design.shape[1]} vs {n}")
        return design

    indices, indptr = as_active_rows(feature_log)
    if n is None:
        if not isinstance(feature_log, np.ndarray) and len(feature_log):
            n = feature_log[0].n
        else:
            n = int(indices.max()) + 1 if len(indices) else 1
    if len(indices) and (indices.min() < 0 or indices.max() >= n):
        raise InputError(f"활성 인덱스가 [0, {n}) 범위 밖입니다")
    return sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(len(indptr) - 1, n))


class GramAccumulator:
    """
    정규 방정식 누적기 (A = ΦᵀΦ, b = ΦᵀG)

    used 특징만으로 압축한 좌표에서 누적한다.
    행 구간별로 나눠 누적한 뒤 merge로 합칠 수 있다.
    """

    def __init__(self, used: np.ndarray, n: int, chunk_rows: int = 2000):
        self.n = n
        self.used = np.asarray(used, dtype=np.int64)
        self.chunk_rows = chunk_rows
        self._remap = np.full(n, -1, dtype=np.int64)
        self._remap[self.used] = np.arange(len(self.used))
        size = len(self.used)
        self.gram = np.zeros((size, size))
        self.rhs = np.zeros(size)
        self.rows = 0

    @classmethod
    def for_features(cls, feature_log, n: int, chunk_rows: int = 2000) -> 'GramAccumulator':
        """로그에서 한 번이라도 활성인 특징만으로 구성"""
        return cls(np.unique(design_matrix(feature_log, n).indices), n, chunk_rows)

    def positions(self, features: np.ndarray) -> np.ndarray:
        """특징 인덱스 → 압축 좌표"""
        local = self._remap[np.asarray(features, dtype=np.int64)]
        if (local < 0).any():
            raise InputError("누적기에 등록되지 않은 특징 인덱스가 있습니다")
        return local

    def compact(self, design: sparse.csr_matrix) -> sparse.csr_matrix:
        """(rows, n) 설계 행렬 → (rows, |used|)"""
        return sparse.csr_matrix(
            (design.data, self.positions(design.indices), design.indptr),
            shape=(design.shape[0], len(self.used)),
        )

    def add(self, feature_log, returns: Optional[np.ndarray] = None) -> 'GramAccumulator':
        """행 묶음 누적 (returns가 있으면 b도 누적)"""
        design = design_matrix(feature_log, self.n)
        for lo in range(0, design.shape[0], self.chunk_rows):
            block = self.compact(design[lo:lo + self.chunk_rows])
            product = (block.T @ block).tocoo()
            self.gram[product.row, product.col] += product.data
            if returns is not None:
                self.rhs += block.T @ np.asarray(returns[lo:lo + self.chunk_rows], dtype=np.float64)
        self.rows += design.shape[0]
        return self

    def merge(self, other: 'GramAccumulator') -> 'GramAccumulator':
        if not np.array_equal(self.used, other.used):
            raise InputError("특징 집합이 다른 누적기는 합칠 수 없습니다")
        self.gram += other.gram
        self.rhs += other.rhs
        self.rows += other.rows
        return self

    def default_ridge(self, factor: float = DEFAULT_RIDGE_FACTOR, subset: Optional[np.ndarray] = None) -> float:
        """factor x trace(A) / n_used"""
        diag = np.diag(self.gram)
        if subset is not None:
            diag = diag[self.positions(subset)]
        return factor * float(diag.sum()) / max(len(diag), 1)

    def solve(
        self,
        ridge: Optional[float] = None,
        rhs: Optional[np.ndarray] = None,
        ridge_factor: float = DEFAULT_RIDGE_FACTOR,
        subset: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, float]:
        """
        (A + ridge·I) θ = b 풀이

        subset이 있으면 그 특징들의 부분 시스템만 푼다 (rhs도 subset 좌표).

        Returns:
            (n 차원 θ, 사용한 ridge)
        """
        if ridge is None:
            ridge = self.default_ridge(ridge_factor, subset)
        if ridge < 0:
            raise InputError(f"ridge는 0 이상이어야 합니다: {ridge}")

        if subset is None:
            features = self.used
            system = self.gram.copy()
            b = self.rhs if rhs is None else rhs
        else:
            features = np.asarray(subset, dtype=np.int64)
            pos = self.positions(features)
            system = self.gram[np.ix_(pos, pos)]
            b = self.rhs[pos] if rhs is None else rhs

        system[np.diag_indices_from(system)] += ridge
        try:
            factor = cho_factor(system, lower=False, overwrite_a=True, check_finite=False)
        except LinAlgError as e:
            raise NumericError("정규 방정식이 특이 행렬입니다: ridge > 0 을 사용하세요") from e

        diag = np.abs(np.diag(factor[0]))
        if ridge == 0 and diag.size and diag.min() <= diag.max() * _SINGULAR_RATIO:
            raise NumericError("정규 방정식이 특이 행렬에 가깝습니다: ridge > 0 을 사용하세요")

        local = cho_solve(factor, b, check_finite=False)
        theta = np.zeros(self.n)
        theta[features] = local
        if not np.isfinite(theta).all():
            raise NumericError("최소제곱 해가 유한하지 않습니다: ridge > 0 을 사용하세요")
        return theta, float(ridge)


def offline_rmse(theta: np.ndarray, feature_log, returns) -> float:
    """sqrt(mean_t (φ_tᵀθ − G_t)²)"""
    values = _values(returns)
    theta = np.asarray(theta, dtype=np.float64)
    design = design_matrix(feature_log, len(theta))
    rows = min(len(values), design.shape[0])
    if rows == 0:
        raise InputError("특징과 리턴이 겹치는 구간이 없습니다")
    predictions = design[:rows] @ theta
    return float(np.sqrt(np.mean((predictions - values[:rows]) ** 2)))


def solve_offline(
    feature_log,
    returns,
    ridge: Optional[float] = None,
    n: Optional[int] = None
) -> OfflineSolution:
    """
    오프라인 최소제곱 해 θ*

    Args:
        feature_log: FeatureVector 시퀀스 (행마다 활성 개수가 달라도 됨),
            (N, active) 인덱스 행렬 또는 CSR 설계 행렬
        returns: ReturnSeries 또는 리턴 배열 (앞쪽 행과 정렬)
        ridge: None이면 1e-8 x trace(A)/n_used
        n: 특징 차원 (인덱스 행렬일 때 필수)
    """
    values = _values(returns)
    if n is None and isinstance(feature_log, np.ndarray):
        raise InputError("인덱스 행렬에는 특징 차원 n이 필요합니다")
    design = design_matrix(feature_log, n)
    n = design.shape[1]
    rows = min(len(values), design.shape[0])
    if rows == 0:
        raise InputError("특징과 리턴이 겹치는 구간이 없습니다")

    design = design[:rows]
    accumulator = GramAccumulator.for_features(design, n)
    accumulator.add(design, values[:rows])
    theta, used_ridge = accumulator.solve(ridge)

    solution = OfflineSolution(
        theta_star=theta,
        ridge=used_ridge,
        residual_rmse=offline_rmse(theta, design, values[:rows]),
        rows=rows,
        features_used=len(accumulator.used),
    )
    logger.debug(f"θ* 계산: 행 {rows:,}, 특징 {solution.features_used:,}, 잔차 RMSE {solution.residual_rmse:.6f}")
    return solution


def solve_many(
    feature_log,
    return_sets: Sequence[np.ndarray],
    n: int,
    ridge: Optional[float] = None,
    ridge_factor: float = DEFAULT_RIDGE_FACTOR
) -> List[OfflineSolution]:
    """
    여러 프로브의 θ*를 한 번에

    공통 앞부분의 Gram을 한 번만 누적하고, 프로브별로 남은 행만 더한다.
    프로브마다 자기 행에서 활성인 특징만으로 푼다 (solve_offline과 같은 시스템).
    """
    design = design_matrix(feature_log, n)
    lengths = [min(len(_values(r)), design.shape[0]) for r in return_sets]
    if not lengths or min(lengths) == 0:
        raise InputError("특징과 리턴이 겹치는 구간이 없습니다")

    order = np.argsort(lengths, kind='stable')
    shared = GramAccumulator.for_features(design[:max(lengths)], n)
    solutions: List[Optional[OfflineSolution]] = [None] * len(return_sets)

    done = 0
    for i in order:
        rows = lengths[i]
        if rows > done:
            shared.add(design[done:rows])
            done = rows
        block = design[:rows]
        values = _values(return_sets[i])[:rows]
        used = np.unique(block.indices)
        rhs = (shared.compact(block).T @ values)[shared.positions(used)]
        subset = None if len(used) == len(shared.used) else used
        theta, used_ridge = shared.solve(ridge, rhs=rhs, ridge_factor=ridge_factor, subset=subset)
        solutions[i] = OfflineSolution(
            theta_star=theta,
            ridge=used_ridge,
            residual_rmse=offline_rmse(theta, block, values),
            rows=rows,
            features_used=len(used),
        )
    return solutions
