"""
공통 테스트 픽스처
"""

import os
import sys

import numpy as np
import pytest
import yaml

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from collectors import CHANNEL_NAMES, PenSimulator, SimParams, PolicyParams  # noqa: E402
from processors import TilingSpec, build_tile_coder  # noqa: E402
from processors.tile_coder import KIND_1D, KIND_2D  # noqa: E402

SMALL_TILING = """\
# 테스트용 소형 타일링
tile1d light 4 2 1
tile1d ir_front 4 2 2
tile1d ir_right 4 2 3
tile1d motor_temp 4 2 4
tile2d light ir_right 3 2 101
"""


@pytest.fixture
def fast_sim_params():
    """짧은 실행에서도 냉각 정지가 나오는 파라미터"""
    return SimParams(pause_interval_steps=300, pause_steps=30, seed=3)


@pytest.fixture
def small_log(fast_sim_params):
    return PenSimulator(fast_sim_params, PolicyParams(), seed=3).collect(1500)


@pytest.fixture
def small_tiling_path(tmp_path):
    path = tmp_path / "tiling_small.cfg"
    path.write_text(SMALL_TILING, encoding='utf-8')
    return str(path)


@pytest.fixture
def small_coder():
    names = list(CHANNEL_NAMES)
    specs = [
        TilingSpec(KIND_1D, names.index('light'), 4, 2, 1),
        TilingSpec(KIND_1D, names.index('ir_front'), 4, 2, 2),
        TilingSpec(KIND_2D, names.index('light'), 3, 2, 101, channel_b=names.index('ir_right')),
    ]
    return build_tile_coder(specs, n_channels=len(names))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cli_settings(tmp_path, small_tiling_path):
    """CLI 테스트용 설정 (소형 타일링, 임시 레지스트리/로그 디렉토리)"""
    settings = {
        'simulator': {'pause_interval_steps': 300, 'pause_steps': 30, 'seed': 0},
        'policy': {'random_action_prob': 0.05},
        'learning': {
            'lambda': 0.9,
            'alpha': 'auto',
            'discounts': [0.0, 0.8, 0.95],
            'feature_targets': 4,
            'feature_seed': 0,
            'workers': 1,
            'tiling': small_tiling_path,
        },
        'evaluation': {
            'bin_size': 100,
            'refractory_steps': 50,
            'window_before': 20,
            'window_after': 10,
            'return_eps': 1.0e-6,
        },
        'output': {
            'directory': str(tmp_path / 'outputs'),
            'registry': str(tmp_path / 'registry.db'),
        },
        'logging': {'level': 'WARNING', 'directory': None},
    }
    path = tmp_path / "settings.yaml"
    path.write_text(yaml.safe_dump(settings, allow_unicode=True), encoding='utf-8')
    return str(path)
