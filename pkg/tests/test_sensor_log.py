"""
센서 로그 저장/로드 테스트
"""

import numpy as np
import pytest

from collectors import LogReplayCollector, SensorFrame, SensorLog, load_log, quantize, write_log
from utils.errors import InputError, LogParseError

NAMES = ['a', 'b', 'c']


def _write(tmp_path, text: str) -> str:
    path = tmp_path / "log.csv"
    path.write_text(text, encoding='utf-8')
    return str(path)


class TestRoundTrip:

    def test_random_frames(self, tmp_path, rng):
        channels = quantize(rng.random(3000)).reshape(1000, 3)
        frames = [SensorFrame(step=i, channels=channels[i], action=i % 4) for i in range(1000)]
        path = write_log(frames, str(tmp_path / "log.csv"), channel_names=NAMES)
        log = load_log(path)
        assert log.channel_names == NAMES
        assert np.array_equal(log.channels, channels)
        assert log.actions.tolist() == [i % 4 for i in range(1000)]

    def test_simulator_log_bytes_stable(self, tmp_path, small_log):
        first = write_log(small_log, str(tmp_path / "a.csv"))
        second = write_log(load_log(first), str(tmp_path / "b.csv"))
        with open(first, 'rb') as fa, open(second, 'rb') as fb:
            assert fa.read() == fb.read()

    def test_empty_file_with_header(self, tmp_path):
        log = load_log(_write(tmp_path, "step,action,a,b,c\n"))
        assert len(log) == 0
        assert log.channels.shape == (0, 3)

    def test_replay_collector(self, tmp_path, small_log):
        path = write_log(small_log, str(tmp_path / "log.csv"))
        replay = LogReplayCollector(path)
        assert replay.channel_names == small_log.channel_names
        assert len(replay.collect(100)) == 100
        assert np.array_equal(replay.collect().channels, small_log.channels)


class TestParseErrors:

    def test_wrong_column_count(self, tmp_path):
        path = _write(tmp_path, "step,action,a,b,c\n0,0,0.1,0.2,0.3\n1,0,0.1,0.2\n")
        with pytest.raises(LogParseError) as exc:
            load_log(path)
        assert exc.value.line_number == 3

    def test_value_out_of_range(self, tmp_path):
        path = _write(tmp_path, "step,action,a,b,c\n0,0,0.1,0.2,0.3\n1,0,0.1,0.2,0.3\n2,0,0.1,1.2,0.3\n")
        with pytest.raises(LogParseError) as exc:
            load_log(path)
        assert exc.value.line_number == 4

    def test_not_a_number(self, tmp_path):
        path = _write(tmp_path, "step,action,a,b,c\n0,0,x,0.2,0.3\n")
        with pytest.raises(LogParseError) as exc:
            load_log(path)
        assert exc.value.line_number == 2

    def test_bad_header(self, tmp_path):
        with pytest.raises(LogParseError):
            load_log(_write(tmp_path, "time,a,b\n0,0.1,0.2\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_log(str(tmp_path / "none.csv"))

    def test_write_rejects_out_of_range(self, tmp_path):
        log = SensorLog(NAMES, np.arange(2), np.zeros(2), np.array([[0.1, 0.2, 1.5], [0.0, 0.0, 0.0]]))
        with pytest.raises(InputError):
            write_log(log, str(tmp_path / "bad.csv"))


def test_channel_lookup(small_log):
    assert np.array_equal(small_log.channel('light'), small_log.channel(4))
    with pytest.raises(InputError):
        small_log.channel('sonar')
