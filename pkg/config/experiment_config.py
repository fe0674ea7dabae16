"""
실험 설정 모듈
- settings.yaml 로드
- 시뮬레이터/정책/학습/평가 설정 데이터클래스
- CLI 인자 > YAML > 기본값 병합
"""

import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import yaml

from collectors.pen_simulator import PolicyParams, SimParams
from utils.errors import ConfigurationError

DEFAULT_SETTINGS_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'settings.yaml')
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def resolve_path(path: Optional[str]) -> Optional[str]:
    """상대 경로가 현재 위치에 없으면 프로젝트 루트 기준으로"""
    if not path or os.path.isabs(path) or os.path.exists(path):
        return path
    candidate = os.path.join(PROJECT_ROOT, path)
    return candidate if os.path.exists(candidate) else path


def load_settings(path: Optional[str] = None) -> Dict[str, Any]:
    """settings.yaml 로드 (없으면 빈 설정)"""
    path = path or DEFAULT_SETTINGS_PATH
    if not os.path.exists(path):
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"설정 파일을 읽을 수 없습니다: {path} ({e})") from e
    return data or {}


def _known(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    """데이터클래스 필드에 없는 키는 오류"""
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigurationError(f"{cls.__name__}: 알 수 없는 설정 {sorted(unknown)}")
    return dict(data)


def sim_params_from_dict(data: Optional[Dict[str, Any]]) -> SimParams:
    values = _known(SimParams, data or {})
    for key in ('lamp_position', 'start_pose'):
        if key in values:
            values[key] = tuple(values[key])
    return SimParams(**values)


def policy_params_from_dict(data: Optional[Dict[str, Any]]) -> PolicyParams:
    values = _known(PolicyParams, data or {})
    for key in ('side_distance_band', 'action_set'):
        if key in values:
            values[key] = tuple(values[key])
    return PolicyParams(**values)


def load_sim_params(path: str) -> Tuple[SimParams, PolicyParams]:
    """시뮬레이터 파라미터 파일 (simulator:, policy: 섹션)"""
    if not os.path.exists(path):
        raise ConfigurationError(f"파라미터 파일이 없습니다: {path}")
    data = load_settings(path)
    return sim_params_from_dict(data.get('simulator')), policy_params_from_dict(data.get('policy'))


@dataclass
class LearningDefaults:
    """학습 기본값"""
    lam: float = 0.9
    alpha: str = 'auto'
    discounts: Tuple[float, ...] = (0.0, 0.8, 0.95, 0.9875)
    feature_targets: int = 487
    feature_seed: int = 0
    power_gamma: float = 0.95
    power_throttled_gamma: float = 0.1
    power_channel: str = 'light'
    power_threshold: float = 1.0
    workers: int = 1
    tiling: str = 'config/tiling_reference.cfg'
    trace_mode: str = 'lazy'
    override_alpha_scaling: bool = True

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'LearningDefaults':
        data = dict(data or {})
        throttle = data.pop('power_throttle', {}) or {}
        if 'lambda' in data:
            data['lam'] = data.pop('lambda')
        if 'discounts' in data:
            data['discounts'] = tuple(float(g) for g in data['discounts'])
        if 'alpha' in data:
            data['alpha'] = str(data['alpha'])
        for key, target in (('gamma', 'power_gamma'), ('throttled_gamma', 'power_throttled_gamma'),
                            ('channel', 'power_channel'), ('threshold', 'power_threshold')):
            if key in throttle:
                data[target] = throttle[key]
        return cls(**_known(cls, data))

    def resolve_alpha(self, active_per_step: int, override: Optional[str] = None) -> float:
        """'auto' → 0.1 / active_per_step"""
        rule = override if override is not None else self.alpha
        if str(rule) == 'auto':
            return 0.1 / active_per_step
        try:
            alpha = float(rule)
        except ValueError as e:
            raise ConfigurationError(f"alpha는 'auto' 또는 양수여야 합니다: {rule}") from e
        if alpha <= 0:
            raise ConfigurationError(f"alpha는 양수여야 합니다: {alpha}")
        return alpha

    def scales_alpha(self, override: Optional[str] = None) -> bool:
        """λ 덮어쓰기 시 α를 흔적 상한 비율로 줄일지 (α 규칙이 auto일 때만, 스펙 파일 α에도 적용)"""
        rule = override if override is not None else self.alpha
        return bool(self.override_alpha_scaling) and str(rule) == 'auto'


@dataclass
class EvalDefaults:
    """평가 기본값"""
    bin_size: int = 1000
    saturation_threshold: float = 0.99
    refractory_steps: int = 100
    window_before: int = 100
    window_after: int = 60
    return_eps: float = 1e-6
    ridge_factor: float = 1e-8
    final_fraction: float = 0.25

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'EvalDefaults':
        return cls(**_known(cls, data or {}))


@dataclass
class RunConfig:
    """명령 하나의 실행 설정"""
    output_dir: str = 'outputs'
    log_path: Optional[str] = None
    tiling_path: Optional[str] = None
    spec_path: Optional[str] = None
    steps: Optional[int] = None
    lambda_override: Optional[float] = None
    alpha: Optional[str] = None
    workers: int = 1
    probes: List[str] = field(default_factory=list)
    learning: LearningDefaults = field(default_factory=LearningDefaults)
    evaluation: EvalDefaults = field(default_factory=EvalDefaults)
    registry: str = 'outputs/nexting.db'

    @classmethod
    def from_args(cls, args, settings: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """CLI 인자 > settings.yaml > 기본값"""
        settings = settings or {}
        learning = LearningDefaults.from_dict(settings.get('learning'))
        evaluation = EvalDefaults.from_dict(settings.get('evaluation'))
        output = settings.get('output') or {}

        def arg(name, default=None):
            value = getattr(args, name, None)
            return default if value is None else value

        config = cls(
            output_dir=arg('out', output.get('directory', 'outputs')),
            log_path=arg('log'),
            tiling_path=resolve_path(arg('tiling', learning.tiling)),
            spec_path=arg('specs'),
            steps=arg('steps', arg('max_steps')),
            lambda_override=arg('lam'),
            alpha=arg('alpha'),
            workers=arg('workers', learning.workers),
            probes=list(arg('probe', []) or []),
            learning=learning,
            evaluation=evaluation,
            registry=arg('registry', output.get('registry', 'outputs/nexting.db')),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if self.steps is not None and self.steps < 1:
            raise ConfigurationError(f"스텝 수는 1 이상이어야 합니다: {self.steps}")
        if self.workers < 1:
            raise ConfigurationError(f"작업자 수는 1 이상이어야 합니다: {self.workers}")
        if self.lambda_override is not None and not 0.0 <= self.lambda_override <= 1.0:
            raise ConfigurationError(f"lambda는 [0, 1] 범위여야 합니다: {self.lambda_override}")
        for name in ('log_path', 'tiling_path', 'spec_path'):
            path = getattr(self, name)
            if path and not os.path.exists(path):
                raise ConfigurationError(f"파일이 없습니다: {path}")
