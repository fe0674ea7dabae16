"""
평가 도구 테스트
"""

import numpy as np
import pytest

from analyzers.evaluation import align_events, detect_events, final_fraction_rmse, normalized_rmse
from analyzers.offline_oracle import compute_returns
from collectors import PenSimulator, SimParams
from utils.errors import InputError


class TestNormalizedRmse:

    def test_perfect_predictions(self, rng):
        returns = rng.random(3500)
        curve = normalized_rmse(returns, returns, 0.9, bin_size=1000)
        assert len(curve.values) == 4
        assert not curve.values.any()

    def test_divisor(self):
        returns = np.zeros(1000)
        predictions = np.full(1000, 8.0)
        curve = normalized_rmse(predictions, returns, 0.9875, bin_size=1000)
        assert curve.values[0] == pytest.approx(0.1)

    def test_zero_predictor_constant_return(self):
        curve = normalized_rmse(np.zeros(500), np.full(500, 3.0), 0.8, bin_size=100)
        assert np.allclose(curve.values, 3.0 / 5.0)

    def test_partial_last_bin(self):
        returns = np.zeros(250)
        predictions = np.concatenate([np.zeros(200), np.full(50, 2.0)])
        curve = normalized_rmse(predictions, returns, 0.0, bin_size=100)
        assert curve.values.tolist() == pytest.approx([0.0, 0.0, 2.0])
        assert curve.final == pytest.approx(2.0)

    def test_longer_predictions_truncated(self):
        curve = normalized_rmse(np.ones(1200), np.ones(1000), 0.5, bin_size=500)
        assert len(curve.values) == 2

    def test_empty_span(self):
        with pytest.raises(InputError):
            normalized_rmse(np.zeros(10), np.zeros(0), 0.5)

    def test_final_fraction(self):
        predictions = np.concatenate([np.full(300, 10.0), np.full(100, 1.0)])
        value = final_fraction_rmse(predictions, np.zeros(400), 0.5, fraction=0.25)
        assert value == pytest.approx(0.5)


class TestDetectEvents:

    def test_never_saturates(self, rng):
        assert detect_events(rng.random(1000) * 0.9) == []

    def test_square_wave(self):
        period = np.concatenate([np.zeros(200), np.ones(200)])
        signal = np.tile(period, 10)
        onsets = detect_events(signal, 0.99, refractory=100)
        assert onsets == [200 + 400 * i for i in range(10)]

    def test_refractory_suppresses_flicker(self):
        signal = np.zeros(600)
        signal[300:310] = 1.0
        signal[320:330] = 1.0   # 10스텝 뒤 재포화 → 같은 이벤트
        assert detect_events(signal, 0.99, refractory=100) == [300]

    def test_saturated_at_start_is_not_onset(self):
        signal = np.concatenate([np.ones(50), np.zeros(150), np.ones(10)])
        assert detect_events(signal, 0.99, refractory=100) == [200]


class TestAlignEvents:

    def test_single_event(self, rng):
        series = rng.random(100)
        aligned = align_events([50], (10, 5), {'signal': series})
        assert np.array_equal(aligned['signal'], series[40:56])
        assert aligned.event_count == 1

    def test_mirror_events_average_to_midpoint(self):
        up = np.linspace(0.0, 1.0, 21)
        series = np.concatenate([np.zeros(10), up, np.zeros(20), up[::-1], np.zeros(10)])
        onsets = [20, 61]
        aligned = align_events(onsets, (10, 10), {'signal': series})
        expected = (series[10:31] + series[51:72]) / 2
        assert np.allclose(aligned['signal'], expected)
        assert aligned.at('signal', 0) == pytest.approx(expected[10])

    def test_events_without_full_window_dropped(self):
        series = np.arange(100, dtype=float)
        aligned = align_events([5, 50, 98], (10, 5), {'signal': series, 'return': series[:80]})
        assert aligned.event_count == 1
        assert aligned.dropped == 2

    def test_no_retained_event(self):
        with pytest.raises(InputError):
            align_events([2], (10, 5), {'signal': np.zeros(100)})

    def test_frame_layout(self):
        aligned = align_events([30], (3, 2), {'signal': np.arange(50.0), 'prediction': np.zeros(50)})
        df = aligned.to_frame()
        assert list(df.columns) == ['offset', 'signal', 'prediction']
        assert df['offset'].tolist() == [-3, -2, -1, 0, 1, 2]


class TestAnticipation:

    def test_ideal_return_rises_before_saturation(self):
        """8초 시간척도 이상적 리턴이 포화 시작 전에 이미 올라간다"""
        log = PenSimulator(SimParams(seed=7)).collect(6000)
        light = log.channel('light')
        series = compute_returns(light, np.full(len(light), 0.9875))
        onsets = detect_events(light, 0.99, 100)
        aligned = align_events(onsets, (100, 60), {'signal': light, 'return': series.values})
        assert aligned.event_count >= 5
        assert aligned.at('return', -20) > aligned.at('return', -80)
        assert aligned.at('signal', 0) >= 0.99
