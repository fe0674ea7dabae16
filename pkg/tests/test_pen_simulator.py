"""
펜 시뮬레이터 테스트
"""

import numpy as np
import pytest

from analyzers.evaluation import detect_events
from collectors import CHANNEL_NAMES, PenSimulator, PenWorld, PolicyParams, SimParams, step_sim, wall_follow_policy
from collectors.pen_simulator import BACK_TURN, CH, FORWARD, SLIDE_LEFT, SLIDE_RIGHT
from utils.errors import ConfigurationError

DETERMINISTIC = PolicyParams(random_action_prob=0.0)


def _world(x, y, heading=0, **params) -> PenWorld:
    world = PenWorld.create(SimParams(**params), seed=1)
    world.x, world.y, world.heading_deg = x, y, heading
    return world


class TestPolicy:

    def test_front_obstacle_back_turn(self):
        assert wall_follow_policy(_world(1.85, 0.25), DETERMINISTIC) == BACK_TURN

    def test_side_in_band_forward(self):
        assert wall_follow_policy(_world(1.0, 0.25), DETERMINISTIC) == FORWARD

    def test_side_band_corrections(self):
        assert wall_follow_policy(_world(1.0, 0.15), DETERMINISTIC) == SLIDE_LEFT
        assert wall_follow_policy(_world(1.0, 0.5), DETERMINISTIC) == SLIDE_RIGHT

    def test_random_action_fraction(self):
        sim = PenSimulator(SimParams(seed=5), PolicyParams(random_action_prob=0.05))
        sim.collect(20000)
        assert sim.world.random_actions / 20000 == pytest.approx(0.05, abs=0.01)

    def test_invalid_band(self):
        with pytest.raises(ConfigurationError):
            PolicyParams(side_distance_band=(0.8, 0.7))


class TestStep:

    def test_light_saturates_near_lamp(self):
        world = _world(0.1, 0.7)
        frame, _ = step_sim(world, FORWARD, DETERMINISTIC)
        assert frame.channels[CH['light']] == 1.0

    def test_light_low_far_from_lamp(self):
        world = _world(1.9, 0.7, heading=90)
        frame, _ = step_sim(world, FORWARD, DETERMINISTIC)
        assert frame.channels[CH['light']] < 0.2

    def test_channels_normalized(self, small_log):
        assert small_log.channels.shape == (1500, len(CHANNEL_NAMES))
        assert small_log.channels.min() >= 0.0
        assert small_log.channels.max() <= 1.0

    def test_corner_turn_completes(self):
        world = _world(1.85, 0.25)
        actions = []
        for _ in range(3):
            action = wall_follow_policy(world, DETERMINISTIC)
            actions.append(action)
            step_sim(world, action, DETERMINISTIC)
        assert actions == [BACK_TURN] * 3
        assert world.heading_deg == 90
        assert world.turn_remaining_deg == 0

    def test_world_updated_in_place(self):
        world = _world(1.0, 0.25)
        frame, returned = step_sim(world, FORWARD, DETERMINISTIC)
        assert returned is world
        assert frame.step == 0 and world.step == 1
        assert world.x == pytest.approx(1.016)

    def test_pause_stops_motors(self):
        sim = PenSimulator(SimParams(pause_interval_steps=200, pause_steps=20, seed=2), DETERMINISTIC)
        log = sim.collect(700)
        intervals = sim.pause_intervals()
        assert intervals
        motors = [CH[f'motor_voltage{i}'] for i in range(3)] + [CH[f'motor_current{i}'] for i in range(3)]
        for start, end in intervals:
            if end > len(log):
                continue
            block = log.channels[start:end - 1][:, motors]
            assert not block.any()
            assert not log.channels[start:end, [CH[f'motor_voltage{i}'] for i in range(3)]].any()

    def test_temperature_resets_after_pause(self):
        sim = PenSimulator(SimParams(pause_interval_steps=200, pause_steps=20, seed=2), DETERMINISTIC)
        log = sim.collect(500)
        start, end = sim.pause_intervals()[0]
        temp = log.channel('motor_temp')
        assert temp[start - 1] == 1.0
        assert temp[end - 1] == 0.0


class TestSimulator:

    def test_deterministic(self, fast_sim_params):
        a = PenSimulator(fast_sim_params, seed=9).collect(800)
        b = PenSimulator(fast_sim_params, seed=9).collect(800)
        assert np.array_equal(a.channels, b.channels)
        assert np.array_equal(a.actions, b.actions)

    def test_seed_changes_series(self, fast_sim_params):
        a = PenSimulator(fast_sim_params, seed=1).collect(300)
        b = PenSimulator(fast_sim_params, seed=2).collect(300)
        assert not np.array_equal(a.channels, b.channels)

    def test_zero_steps_rejected(self):
        with pytest.raises(ConfigurationError):
            PenSimulator().collect(0)

    def test_params_validation(self):
        with pytest.raises(ConfigurationError):
            SimParams(turn_step_deg=25)

    @pytest.mark.slow
    def test_loop_period(self):
        sim = PenSimulator(SimParams(seed=7))
        log = sim.collect(40000)
        onsets = np.array(detect_events(log.channel('light'), 0.99, 100))
        spacing = np.diff(onsets)
        # 냉각 정지가 낀 간격은 제외
        spacing = spacing[spacing < 900]
        assert len(spacing) > 50
        assert np.median(spacing) == pytest.approx(400, rel=0.25)
