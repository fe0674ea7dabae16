"""
예측 뱅크 테스트
"""

import numpy as np
import pytest

from analyzers.horde import (
    FEATURE, POWER, SENSOR, TRACE_DENSE, TRACE_LAZY, PredictionSpec, TargetSelector, bank_step, build_bank,
    default_probe_ids, default_specs, format_specs, gamma_series, parse_label, parse_spec_file, resolve_gamma,
    resolve_target, select_probes, spec_hash, target_series, trace_scaled_alpha
)
from analyzers.td_learner import DiscountRule, LearnerState, td_step
from collectors import CHANNEL_NAMES
from collectors.sensor_log import SensorFrame
from processors import FeatureVector
from processors.tile_coder import encode_log
from utils.errors import ConfigurationError

NAMES = list(CHANNEL_NAMES)
LIGHT = NAMES.index('light')


def _frame(values=None, **channels) -> SensorFrame:
    data = np.zeros(len(NAMES)) if values is None else np.asarray(values, dtype=np.float64)
    for name, value in channels.items():
        data[NAMES.index(name)] = value
    return SensorFrame(step=0, channels=data, action=0)


def _power_selector() -> TargetSelector:
    return TargetSelector.power([
        (NAMES.index(f'motor_voltage{i}'), NAMES.index(f'motor_current{i}')) for i in range(3)
    ])


class TestDefaultSpecs:

    def test_reference_scale_counts(self):
        names = [f'ch{i}' for i in range(53)]
        specs = default_specs(names, n=6000, alpha=0.1 / 457, power=False)
        sensor = [s for s in specs if s.target.kind == SENSOR]
        feature = [s for s in specs if s.target.kind == FEATURE]
        assert len(sensor) == 212
        assert len(feature) == 1948
        assert len(specs) == 2160
        assert [s.id for s in specs] == list(range(2160))

    def test_feature_targets_distinct_and_seeded(self):
        a = default_specs(NAMES, n=500, alpha=0.01, feature_targets=20, feature_seed=4)
        b = default_specs(NAMES, n=500, alpha=0.01, feature_targets=20, feature_seed=4)
        assert format_specs(a) == format_specs(b)
        indices = {s.target.feature_index for s in a if s.target.kind == FEATURE}
        assert len(indices) == 20

    def test_power_prediction_added(self):
        specs = default_specs(NAMES, n=100, alpha=0.01, feature_targets=2)
        power = [s for s in specs if s.target.kind == POWER]
        assert len(power) == 1
        assert not power[0].discount.is_constant
        assert power[0].discount.trigger_channel == LIGHT

    def test_default_probes(self):
        specs = default_specs(NAMES, n=100, alpha=0.01, feature_targets=2)
        probes = default_probe_ids(specs, NAMES)
        labels = [specs[i].label(NAMES) for i in probes]
        assert 'sensor:light|const:0.9875' in labels
        assert any(label.startswith('power:') for label in labels)
        assert len(probes) == 5


class TestSpecFile:

    def test_parse_and_format(self):
        text = (
            "# 주석\n"
            "pred 0 sensor:light const:0.95 0.9 0.001\n"
            "pred 1 feature:12 const:0.8 0.9 auto\n"
            "pred 2 power:motor_voltage0,motor_current0,motor_voltage1,motor_current1,"
            "motor_voltage2,motor_current2 throttle:0.95,0.1,light,1.0 0.9 auto\n"
        )
        specs = parse_spec_file(text, NAMES, active_per_step=50)
        assert [s.id for s in specs] == [0, 1, 2]
        assert specs[1].alpha == pytest.approx(0.1 / 50)
        assert specs[2].discount.trigger_channel == LIGHT
        assert parse_spec_file(format_specs(specs, NAMES), NAMES) == specs

    def test_bad_line_reports_number(self):
        with pytest.raises(ConfigurationError, match="2번째 줄"):
            parse_spec_file("pred 0 sensor:light const:0.5 0.9 0.1\npred 1 sensor:sonar const:0.5 0.9 0.1\n", NAMES)

    def test_gamma_one_rejected(self):
        with pytest.raises(ConfigurationError):
            parse_spec_file("pred 0 sensor:light const:1.0 0.9 0.1\n", NAMES)

    def test_hash_independent_of_names(self):
        specs = default_specs(NAMES, n=100, alpha=0.01, feature_targets=2)
        reparsed = parse_spec_file(format_specs(specs, NAMES), NAMES)
        assert spec_hash(specs) == spec_hash(reparsed)

    def test_select_probes_by_label_and_id(self):
        specs = default_specs(NAMES, n=100, alpha=0.01, feature_targets=2)
        ids = select_probes(specs, ['sensor:light|const:0.8', '3'], NAMES)
        assert ids == [LIGHT * 4 + 1, 3]
        with pytest.raises(ConfigurationError):
            select_probes(specs, ['sensor:light|const:0.5'], NAMES)


class TestResolve:

    def test_sensor_target(self):
        spec = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.constant(0.5), 0.9, 0.1)
        assert resolve_target(spec, _frame(light=0.37), FeatureVector(np.array([0]), 4)) == 0.37

    def test_feature_target(self):
        spec = PredictionSpec(0, TargetSelector.feature(2), DiscountRule.constant(0.5), 0.9, 0.1)
        assert resolve_target(spec, _frame(), FeatureVector(np.array([0, 2]), 4)) == 1.0
        assert resolve_target(spec, _frame(), FeatureVector(np.array([0, 3]), 4)) == 0.0

    def test_power_target(self):
        spec = PredictionSpec(0, _power_selector(), DiscountRule.constant(0.5), 0.9, 0.1)
        fv = FeatureVector(np.array([0]), 1)
        assert resolve_target(spec, _frame(motor_current0=0.5, motor_current1=0.4), fv) == 0.0
        frame = _frame(motor_voltage0=0.5, motor_current0=0.4, motor_voltage2=1.0, motor_current2=0.25)
        assert resolve_target(spec, frame, fv) == pytest.approx(0.45)

    def test_gamma_rules(self):
        throttle = PredictionSpec(0, _power_selector(), DiscountRule.throttle(0.95, 0.1, LIGHT, 1.0), 0.9, 0.1)
        constant = PredictionSpec(1, TargetSelector.sensor(0), DiscountRule.constant(0.95), 0.9, 0.1)
        assert resolve_gamma(throttle, _frame(light=1.0)) == 0.1
        assert resolve_gamma(throttle, _frame(light=0.3)) == 0.95
        assert resolve_gamma(constant, _frame(light=1.0)) == 0.95

    def test_series_match_scalar(self, small_coder, small_log):
        idx = encode_log(small_coder, small_log)
        specs = default_specs(NAMES, small_coder.n, alpha=0.01, feature_targets=3)
        for spec in specs[::7]:
            series_r = target_series(spec.target, small_log.channels, idx)
            series_g = gamma_series(spec.discount, small_log.channels)
            for t in (0, 17, 999):
                frame = small_log.frame(t)
                fv = FeatureVector(idx[t], small_coder.n)
                assert series_r[t] == pytest.approx(resolve_target(spec, frame, fv))
                assert series_g[t] == resolve_gamma(spec, frame)

    def test_parse_label_round_trip_meaning(self):
        target, discount = parse_label('sensor:light|const:0.9875', NAMES)
        assert target == TargetSelector.sensor(LIGHT)
        assert discount == DiscountRule.constant(0.9875)


class TestBank:

    def test_invalid_selector(self):
        spec = PredictionSpec(0, TargetSelector.feature(50), DiscountRule.constant(0.5), 0.9, 0.1)
        with pytest.raises(ConfigurationError):
            build_bank([spec], n=10)
        spec = PredictionSpec(0, TargetSelector.sensor(20), DiscountRule.constant(0.5), 0.9, 0.1)
        with pytest.raises(ConfigurationError):
            build_bank([spec], n=10, n_channels=len(NAMES))

    def test_ids_must_be_dense(self):
        spec = PredictionSpec(3, TargetSelector.sensor(0), DiscountRule.constant(0.5), 0.9, 0.1)
        with pytest.raises(ConfigurationError):
            build_bank([spec], n=10)

    def test_empty_bank_is_noop(self):
        with build_bank([], n=5) as bank:
            fv = FeatureVector(np.array([0, 1]), 5)
            predictions, duration = bank_step(bank, fv, fv, _frame(), _frame())
            assert predictions.shape == (0,)
            assert duration >= 0.0

    def test_initial_predictions_zero(self, small_coder, small_log):
        specs = default_specs(NAMES, small_coder.n, alpha=0.01, feature_targets=3)
        with build_bank(specs, small_coder.n) as bank:
            idx = small_coder.encode_values(small_log.channels[0])
            assert not bank.predict(idx).any()

    def test_bias_only_gamma_zero_tracks_reward(self):
        spec = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.constant(0.0), 0.0, 0.1)
        frame = _frame(light=1.0)
        fv = FeatureVector(np.array([0]), 1)
        with build_bank([spec], n=1) as bank:
            for _ in range(500):
                predictions, _ = bank_step(bank, fv, fv, frame, frame)
        assert predictions[0] == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("trace_mode, atol", [(TRACE_DENSE, 1e-12), (TRACE_LAZY, 1e-9)])
    def test_matches_single_learner(self, small_coder, small_log, trace_mode, atol):
        """뱅크 한 행 = td_step 단독 실행"""
        spec = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.constant(0.9), 0.9, 0.1 / small_coder.active_per_step)
        idx = encode_log(small_coder, small_log)
        state = LearnerState.zeros(small_coder.n)
        with build_bank([spec], small_coder.n, trace_mode=trace_mode) as bank:
            for t in range(1, 400):
                bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
                td_step(
                    state, FeatureVector(idx[t - 1], small_coder.n), FeatureVector(idx[t], small_coder.n),
                    small_log.channels[t, LIGHT], 0.9, 0.9, 0.9, spec.alpha,
                )
            assert np.allclose(bank.theta[0], state.theta, rtol=0, atol=atol)
            assert np.allclose(bank.trace[0], state.trace, rtol=0, atol=atol)

    def test_lazy_matches_dense(self, small_coder, small_log):
        """γ=0, 가변 할인, 상수 할인이 섞인 뱅크에서 두 모드가 같은 결과"""
        specs = default_specs(NAMES, small_coder.n, alpha=0.1 / small_coder.active_per_step,
                              discounts=(0.0, 0.8, 0.95, 0.9875), feature_targets=4)
        # 자주 발동하는 가변 할인 (빛 0.3 이상이면 γ → 0)
        specs.append(PredictionSpec(len(specs), TargetSelector.sensor(LIGHT),
                                    DiscountRule.throttle(0.95, 0.0, LIGHT, 0.3), 0.9, specs[0].alpha))
        idx = encode_log(small_coder, small_log)

        def run(trace_mode):
            predictions = []
            with build_bank(specs, small_coder.n, trace_mode=trace_mode, chunk_rows=8) as bank:
                for t in range(1, len(idx)):
                    predictions.append(bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t))
                return np.array(predictions), bank.theta.copy(), bank.trace.copy(), bank.folds

        dense_pred, dense_theta, dense_trace, _ = run(TRACE_DENSE)
        lazy_pred, lazy_theta, lazy_trace, folds = run(TRACE_LAZY)
        assert folds > 0
        assert np.allclose(lazy_pred, dense_pred, rtol=0, atol=1e-8)
        assert np.allclose(lazy_theta, dense_theta, rtol=0, atol=1e-8)
        assert np.allclose(lazy_trace, dense_trace, rtol=0, atol=1e-8)

    def test_lazy_reset_traces_keeps_predictions(self, small_coder, small_log):
        spec = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.constant(0.95), 0.9, 0.01)
        idx = encode_log(small_coder, small_log)
        with build_bank([spec], small_coder.n) as bank:
            for t in range(1, 200):
                bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
            before = bank.predict(idx[200])
            bank.reset_traces()
            assert not bank.trace.any()
            assert np.allclose(bank.predict(idx[200]), before, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("trace_mode", [TRACE_DENSE, TRACE_LAZY])
    def test_worker_count_invariance(self, small_coder, small_log, trace_mode):
        specs = default_specs(NAMES, small_coder.n, alpha=0.1 / small_coder.active_per_step, feature_targets=10)
        idx = encode_log(small_coder, small_log)

        def run(workers):
            with build_bank(specs, small_coder.n, workers=workers, chunk_rows=8, trace_mode=trace_mode) as bank:
                for t in range(1, 600):
                    bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
                return bank.theta.copy()

        single = run(1)
        assert np.array_equal(single, run(3))
        assert np.array_equal(single, run(8))

    def test_lambda_override(self, small_coder):
        specs = default_specs(NAMES, small_coder.n, alpha=0.01, feature_targets=2)
        with build_bank(specs, small_coder.n, lambda_override=0.0) as bank:
            assert not bank.lam.any()

    def test_never_firing_throttle_equals_constant(self, small_coder, small_log):
        """임계값에 닿지 않는 가변 할인 = 상수 할인 (비트 단위)"""
        alpha = 0.1 / small_coder.active_per_step
        throttle = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.throttle(0.95, 0.1, LIGHT, 1.0), 0.9, alpha)
        constant = PredictionSpec(0, TargetSelector.sensor(LIGHT), DiscountRule.constant(0.95), 0.9, alpha)
        idx = encode_log(small_coder, small_log)
        # 빛이 포화에 닿지 않는 스트림
        channels = np.minimum(small_log.channels, 0.99)

        def run(spec):
            with build_bank([spec], small_coder.n) as bank:
                predictions = [
                    bank.step(idx[t - 1], idx[t], channels[t - 1], channels[t], step=t)
                    for t in range(1, len(idx))
                ]
                return np.array(predictions), bank.theta.copy()

        throttle_pred, throttle_theta = run(throttle)
        constant_pred, constant_theta = run(constant)
        assert np.array_equal(throttle_pred, constant_pred)
        assert np.array_equal(throttle_theta, constant_theta)

    @pytest.mark.parametrize("trace_mode", [TRACE_DENSE, TRACE_LAZY])
    def test_trace_bound(self, small_coder, small_log, trace_mode):
        """모든 흔적 성분 ≤ 1 / (1 − γ_max·λ)"""
        specs = default_specs(NAMES, small_coder.n, alpha=0.1 / small_coder.active_per_step,
                              discounts=(0.0, 0.8, 0.95, 0.9875), feature_targets=4)
        idx = encode_log(small_coder, small_log)
        bound = np.array([1.0 / (1.0 - s.discount.max_gamma * s.lam) for s in specs])
        with build_bank(specs, small_coder.n, trace_mode=trace_mode) as bank:
            for t in range(1, len(idx)):
                bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
                if t % 250 == 0:
                    trace = bank.trace
                    assert (trace >= 0).all()
                    assert (trace.max(axis=1) <= bound + 1e-9).all()

    def test_memory_bound_at_reference_scale(self):
        """2160개 예측 x n=7793 뱅크가 400MB 이하"""
        specs = default_specs([f'ch{i}' for i in range(53)], n=7793, alpha=0.1 / 457, power=False)
        with build_bank(specs, 7793) as bank:
            assert bank.k == 2160
            assert bank.memory_bytes < 400 * 1024 ** 2

    def test_invalid_trace_mode(self):
        spec = PredictionSpec(0, TargetSelector.sensor(0), DiscountRule.constant(0.5), 0.9, 0.1)
        with pytest.raises(ConfigurationError):
            build_bank([spec], n=3, trace_mode='sparse')


class TestAlphaScaling:

    def test_ratio(self):
        scaled = trace_scaled_alpha(np.array([0.1, 0.1, 0.1]), np.array([0.9875, 0.0, 0.9875]),
                                    np.full(3, 0.9), np.array([1.0, 1.0, 0.0]))
        assert scaled[0] == pytest.approx(0.1 * 0.0125 / (1.0 - 0.9875 * 0.9))
        # γ=0 이거나 λ가 작아지면 그대로
        assert scaled[1] == 0.1
        assert scaled[2] == 0.1

    def test_bank_scales_only_with_override(self, small_coder):
        specs = default_specs(NAMES, small_coder.n, alpha=0.01, discounts=(0.0, 0.9875), feature_targets=2)
        gamma = np.array([s.discount.max_gamma for s in specs])
        with build_bank(specs, small_coder.n, lambda_override=1.0, scale_alpha=True) as bank:
            expected = 0.01 * np.minimum(1.0, (1.0 - gamma) / (1.0 - gamma * 0.9))
            assert np.allclose(bank.alpha, expected)
            assert bank.alpha.max() == 0.01 and bank.alpha.min() < 0.01 / 8
        with build_bank(specs, small_coder.n, lambda_override=1.0) as bank:
            assert (bank.alpha == 0.01).all()
        with build_bank(specs, small_coder.n, lambda_override=0.0, scale_alpha=True) as bank:
            assert (bank.alpha == 0.01).all()
        with build_bank(specs, small_coder.n, scale_alpha=True) as bank:
            assert (bank.alpha == 0.01).all()

    def test_td1_stays_finite_with_scaling(self, small_coder, small_log):
        """λ=1 덮어쓰기에서 축소한 α로 8초 예측이 발산하지 않는다"""
        specs = default_specs(NAMES, small_coder.n, alpha=0.1 / small_coder.active_per_step,
                              discounts=(0.9875,), feature_targets=0, power=False)
        idx = encode_log(small_coder, small_log)
        with build_bank(specs, small_coder.n, lambda_override=1.0, scale_alpha=True) as bank:
            for t in range(1, len(idx)):
                bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
            bank.check_finite()
            assert np.abs(bank.theta).max() < 1e3

    def test_cycle_summary(self, small_coder, small_log):
        specs = default_specs(NAMES, small_coder.n, alpha=0.01, feature_targets=2)
        idx = encode_log(small_coder, small_log)
        with build_bank(specs, small_coder.n) as bank:
            for t in range(1, 50):
                bank.step(idx[t - 1], idx[t], small_log.channels[t - 1], small_log.channels[t], step=t)
            summary = bank.cycle_summary()
        assert summary['steps'] == 49
        assert summary['median_ms'] <= summary['p99_ms'] <= summary['max_ms']

    def test_states_are_views(self):
        spec = PredictionSpec(0, TargetSelector.sensor(0), DiscountRule.constant(0.5), 0.9, 0.1)
        with build_bank([spec], n=3) as bank:
            bank.states[0].theta[1] = 2.5
            assert bank.theta[0, 1] == 2.5


@pytest.mark.slow
def test_reference_scale_cycle_time(rng):
    """2160개 예측, n=7793, 활성 457개에서 스텝 중앙값 55ms 이하"""
    import os
    from processors import build_tile_coder, load_tiling_config
    from .conftest import ROOT

    coder = build_tile_coder(
        load_tiling_config(os.path.join(ROOT, 'config', 'tiling_reference.cfg'), NAMES), n_channels=len(NAMES)
    )
    # 14채널 x 4 + 특징 526개 x 4 = 2160
    specs = default_specs(NAMES, coder.n, alpha=0.1 / coder.active_per_step, feature_targets=526, power=False)
    assert len(specs) == 2160

    frames = rng.random((301, len(NAMES)))
    idx = coder.encode_batch(frames)
    with build_bank(specs, coder.n, n_channels=len(NAMES), workers=4) as bank:
        for t in range(1, len(frames)):
            bank.step(idx[t - 1], idx[t], frames[t - 1], frames[t], step=t)
        summary = bank.cycle_summary()
    assert summary['median_ms'] <= 55.0
    assert summary['p99_ms'] <= 100.0
