"""
펜(pen) 시뮬레이터 (v1.0)
- 정사각형 펜 + 한쪽 벽의 램프
- 홀로노믹 3륜 로봇의 확률적 벽 따라가기 정책
- 정규화 센서 프레임 방출 (10Hz 상당 스텝)
- 모터 과열 → 냉각 정지 주기

정규화 IR 밴드 매핑:
    원 로봇의 IRDistance 원시 밴드(50-200)는 스케일을 알 수 없으므로
    여기서는 근접도(1 - 거리/IR 사거리) 기준 [0.7, 0.8]
    (벽까지 0.2~0.3m)를 측면 밴드로 정의한다.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from utils.errors import ConfigurationError
from .base_collector import BaseCollector
from .sensor_log import SensorFrame, SensorLog, quantize

logger = logging.getLogger("nexting.simulator")

# 행동
FORWARD = 0
SLIDE_LEFT = 1
SLIDE_RIGHT = 2
BACK_TURN = 3
ACTION_NAMES = ('forward', 'slide-left', 'slide-right', 'back-turn')
N_ACTIONS = len(ACTION_NAMES)

# 기준 채널 구성
CHANNEL_NAMES = [
    'ir_front', 'ir_left', 'ir_back', 'ir_right',
    'light',
    'motor_voltage0', 'motor_voltage1', 'motor_voltage2',
    'motor_current0', 'motor_current1', 'motor_current2',
    'motor_temp',
    'rot_velocity',
    'last_action',
]
CH = {name: i for i, name in enumerate(CHANNEL_NAMES)}
LIGHT_CHANNEL = CH['light']
VOLTAGE_CHANNELS = (CH['motor_voltage0'], CH['motor_voltage1'], CH['motor_voltage2'])
CURRENT_CHANNELS = (CH['motor_current0'], CH['motor_current1'], CH['motor_current2'])

# IR 센서 방향 (로봇 기준, 반시계 각도)
IR_DIRECTIONS = (('ir_front', 0), ('ir_left', 90), ('ir_back', 180), ('ir_right', 270))

# 옴니휠 장착 각도 (라디안)
WHEEL_ANGLES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)

# 30° 단위 방향표 (정확한 0/0.5 값 유지)
_TRIG = {
    deg: (round(math.cos(math.radians(deg)), 12), round(math.sin(math.radians(deg)), 12))
    for deg in range(0, 360, 15)
}


@dataclass
class PolicyParams:
    """벽 따라가기 정책 파라미터"""
    random_action_prob: float = 0.05
    side_distance_band: Tuple[float, float] = (0.7, 0.8)   # 오른쪽 IR 근접도 밴드
    front_obstacle_threshold: float = 0.75                  # 전방 근접도 ≥ 이 값이면 장애물
    action_set: Tuple[str, ...] = ACTION_NAMES

    def __post_init__(self):
        if not 0.0 <= self.random_action_prob <= 1.0:
            raise ConfigurationError(f"random_action_prob는 [0,1] 범위여야 합니다: {self.random_action_prob}")
        low, high = self.side_distance_band
        if not 0.0 <= low < high <= 1.0:
            raise ConfigurationError(f"side_distance_band가 잘못되었습니다: {self.side_distance_band}")
        self.side_distance_band = (float(low), float(high))
        if tuple(self.action_set) != ACTION_NAMES:
            raise ConfigurationError(f"지원하는 행동 집합은 {ACTION_NAMES} 뿐입니다")


@dataclass
class SimParams:
    """시뮬레이터 파라미터 (단위: m, 스텝)"""
    pen_side: float = 2.0
    lamp_position: Tuple[float, float] = (0.0, 0.7)
    saturation_radius: float = 0.4        # 이 거리 안에서 빛 센서 포화
    ambient_light: float = 0.02
    ir_range: float = 1.0
    robot_radius: float = 0.1
    forward_speed: float = 0.016          # m/step (루프 ≈ 400 스텝)
    slide_speed: float = 0.016
    back_speed: float = 0.005
    turn_step_deg: int = 30
    wheel_base: float = 0.1               # 휠-중심 거리
    wheel_speed_max: float = 0.03         # 전압 정규화 기준
    pause_interval_steps: int = 8400      # 냉각 정지 시작 간 평균 간격 (≈14분)
    pause_steps: int = 600                # 냉각 정지 길이
    pause_jitter: float = 0.1
    ir_noise: float = 0.005
    light_noise: float = 0.01
    current_noise: float = 0.02
    start_pose: Tuple[float, float, int] = (1.0, 0.25, 0)
    seed: int = 0

    def __post_init__(self):
        if self.pen_side <= 2 * self.robot_radius:
            raise ConfigurationError("pen_side가 로봇보다 작습니다")
        if self.pause_steps < 1 or self.pause_interval_steps <= self.pause_steps:
            raise ConfigurationError("pause_interval_steps는 pause_steps보다 커야 합니다")
        if self.turn_step_deg <= 0 or 90 % self.turn_step_deg or self.turn_step_deg % 15:
            raise ConfigurationError("turn_step_deg는 90의 약수이면서 15의 배수여야 합니다")
        if not 0.0 <= self.pause_jitter < 1.0:
            raise ConfigurationError("pause_jitter는 [0,1) 범위여야 합니다")
        self.lamp_position = tuple(float(v) for v in self.lamp_position)
        x, y, heading = self.start_pose
        self.start_pose = (float(x), float(y), int(heading) % 360)

    def to_dict(self) -> Dict:
        return {
            'pen_side': self.pen_side,
            'lamp_position': list(self.lamp_position),
            'saturation_radius': self.saturation_radius,
            'ambient_light': self.ambient_light,
            'ir_range': self.ir_range,
            'robot_radius': self.robot_radius,
            'forward_speed': self.forward_speed,
            'slide_speed': self.slide_speed,
            'back_speed': self.back_speed,
            'turn_step_deg': self.turn_step_deg,
            'wheel_base': self.wheel_base,
            'wheel_speed_max': self.wheel_speed_max,
            'pause_interval_steps': self.pause_interval_steps,
            'pause_steps': self.pause_steps,
            'pause_jitter': self.pause_jitter,
            'ir_noise': self.ir_noise,
            'light_noise': self.light_noise,
            'current_noise': self.current_noise,
            'start_pose': list(self.start_pose),
            'seed': self.seed,
        }


@dataclass
class PenWorld:
    """
    펜 월드 상태

    step_sim이 제자리에서 갱신한다 (생성기 상태 포함).
    """
    params: SimParams
    x: float
    y: float
    heading_deg: int
    rng: np.random.Generator
    turn_remaining_deg: int = 0
    wheel_state: np.ndarray = field(default_factory=lambda: np.zeros(3))
    temperature: float = 0.0
    heat_rate: float = 0.0
    overheat_timer: int = 0
    pause_remaining: int = 0
    step: int = 0
    random_actions: int = 0
    pause_starts: List[int] = field(default_factory=list)

    @classmethod
    def create(cls, params: Optional[SimParams] = None, seed: Optional[int] = None) -> 'PenWorld':
        """초기 월드 생성 (seed가 없으면 params.seed)"""
        params = params or SimParams()
        seed = params.seed if seed is None else seed
        x, y, heading = params.start_pose
        world = cls(params=params, x=x, y=y, heading_deg=heading, rng=np.random.default_rng(seed))
        world._draw_heat_rate()
        return world

    @property
    def paused(self) -> bool:
        return self.pause_remaining > 0

    def _draw_heat_rate(self) -> None:
        """다음 과열까지의 가열 속도 (간격에 ±jitter)"""
        p = self.params
        running = (p.pause_interval_steps - p.pause_steps) * self.rng.uniform(1.0 - p.pause_jitter, 1.0 + p.pause_jitter)
        self.heat_rate = 1.0 / running
        self.overheat_timer = int(math.ceil((1.0 - self.temperature) / self.heat_rate))

    def ray_distance(self, direction_deg: int) -> float:
        """현재 위치에서 주어진 방향(월드 기준)으로 벽까지의 거리"""
        c, s = _TRIG[direction_deg % 360]
        side = self.params.pen_side
        candidates = []
        if c > 0:
            candidates.append((side - self.x) / c)
        elif c < 0:
            candidates.append(-self.x / c)
        if s > 0:
            candidates.append((side - self.y) / s)
        elif s < 0:
            candidates.append(-self.y / s)
        return min(candidates)

    def proximity(self, relative_deg: int) -> float:
        """로봇 기준 방향 IR 근접도 (잡음 없음, [0,1])"""
        d = self.ray_distance(self.heading_deg + relative_deg)
        return min(max(1.0 - d / self.params.ir_range, 0.0), 1.0)

    def lamp_distance(self) -> float:
        lx, ly = self.params.lamp_position
        return math.hypot(self.x - lx, self.y - ly)


def wall_follow_policy(world: PenWorld, policy: Optional[PolicyParams] = None) -> int:
    """
    확률적 벽 따라가기 정책

    확률 p로 균등 무작위 행동, 그 외:
    회전 기동 중이거나 전방 장애물 → back-turn,
    오른쪽 측면 근접도가 밴드 밖 → 밴드 쪽으로 slide,
    그 외 → forward
    """
    policy = policy or PolicyParams()

    if world.rng.random() < policy.random_action_prob:
        world.random_actions += 1
        return int(world.rng.integers(N_ACTIONS))

    if world.turn_remaining_deg != 0:
        return BACK_TURN

    if world.proximity(0) >= policy.front_obstacle_threshold:
        return BACK_TURN

    side = world.proximity(270)
    low, high = policy.side_distance_band
    if side > high:
        return SLIDE_LEFT
    if side < low:
        return SLIDE_RIGHT
    return FORWARD


def _body_motion(world: PenWorld, action: int, policy: PolicyParams) -> Tuple[float, float, int]:
    """행동 → 로봇 기준 (vx, vy, 회전각) 및 회전 기동 상태 갱신"""
    p = world.params

    if action == FORWARD:
        return p.forward_speed, 0.0, 0
    if action == SLIDE_LEFT:
        return 0.0, p.slide_speed, 0
    if action == SLIDE_RIGHT:
        return 0.0, -p.slide_speed, 0
    if action != BACK_TURN:
        raise ConfigurationError(f"알 수 없는 행동: {action}")

    step_deg = p.turn_step_deg
    if world.turn_remaining_deg == 0:
        if world.proximity(0) >= policy.front_obstacle_threshold:
            # 코너: 벽을 오른쪽에 둔 채 반시계 90° 회전
            world.turn_remaining_deg = 90
        else:
            # 자발적 back-turn: 벽 쪽으로 한 번 틀었다가 다음 스텝에 복귀
            world.turn_remaining_deg = step_deg
            return -p.back_speed, 0.0, -step_deg

    rotation = step_deg if world.turn_remaining_deg > 0 else -step_deg
    world.turn_remaining_deg -= rotation
    return -p.back_speed, 0.0, rotation


def step_sim(
    world: PenWorld,
    action: int,
    policy: Optional[PolicyParams] = None
) -> Tuple[SensorFrame, PenWorld]:
    """
    월드 1스텝(0.1초) 진행 후 센서 프레임 방출

    Returns:
        (frame, world) - world는 제자리 갱신된 같은 객체
    """
    policy = policy or PolicyParams()
    p = world.params
    rotation = 0

    if world.paused:
        vx = vy = 0.0
        world.wheel_state = np.zeros(3)
        world.pause_remaining -= 1
        world.temperature = max(0.0, world.temperature - 1.0 / p.pause_steps)
        if world.pause_remaining == 0:
            world.temperature = 0.0
            world._draw_heat_rate()
            logger.debug(f"냉각 정지 종료: step {world.step}")
    else:
        vx, vy, rotation = _body_motion(world, action, policy)

        c, s = _TRIG[world.heading_deg]
        world.x += vx * c - vy * s
        world.y += vx * s + vy * c
        low, high = p.robot_radius, p.pen_side - p.robot_radius
        world.x = min(max(world.x, low), high)
        world.y = min(max(world.y, low), high)
        world.heading_deg = (world.heading_deg + rotation) % 360

        omega = math.radians(rotation)
        world.wheel_state = np.array([
            -math.sin(a) * vx + math.cos(a) * vy + p.wheel_base * omega for a in WHEEL_ANGLES
        ])

        world.temperature = min(1.0, world.temperature + world.heat_rate)
        if world.temperature >= 1.0:
            world.pause_remaining = p.pause_steps
            world.pause_starts.append(world.step + 1)
            logger.debug(f"모터 과열 → 냉각 정지 시작: step {world.step + 1}")

    world.overheat_timer = 0 if world.paused else int(math.ceil((1.0 - world.temperature) / world.heat_rate))

    frame = SensorFrame(step=world.step, channels=_read_channels(world, action, rotation), action=int(action))
    world.step += 1
    return frame, world


def _read_channels(world: PenWorld, action: int, rotation: int) -> np.ndarray:
    """현재 상태의 정규화 센서 값 (잡음 포함, 6자리 양자화)"""
    p = world.params
    rng = world.rng
    values = np.zeros(len(CHANNEL_NAMES))

    ir_noise = rng.normal(0.0, p.ir_noise, size=len(IR_DIRECTIONS))
    for (name, rel), noise in zip(IR_DIRECTIONS, ir_noise):
        values[CH[name]] = world.proximity(rel) + noise

    d = world.lamp_distance()
    raw_light = (p.saturation_radius / d) ** 2 if d > 0 else math.inf
    values[LIGHT_CHANNEL] = raw_light + p.ambient_light + rng.normal(0.0, p.light_noise)

    current_noise = rng.normal(0.0, p.current_noise, size=3)
    if not world.paused or world.pause_remaining == p.pause_steps:
        # 정지 직전 스텝은 아직 모터가 돈다
        voltages = np.minimum(np.abs(world.wheel_state) / p.wheel_speed_max, 1.0)
        currents = 0.05 + 0.8 * voltages + current_noise
    else:
        voltages = np.zeros(3)
        currents = np.zeros(3)
    for i in range(3):
        values[VOLTAGE_CHANNELS[i]] = voltages[i]
        values[CURRENT_CHANNELS[i]] = currents[i]

    values[CH['motor_temp']] = world.temperature
    values[CH['rot_velocity']] = 0.5 + 0.5 * rotation / p.turn_step_deg
    values[CH['last_action']] = action / (N_ACTIONS - 1)

    return quantize(np.clip(values, 0.0, 1.0))


class PenSimulator(BaseCollector):
    """
    펜 시뮬레이터 수집기

    같은 seed/파라미터 → 같은 프레임 시계열
    """

    def __init__(
        self,
        params: Optional[SimParams] = None,
        policy: Optional[PolicyParams] = None,
        seed: Optional[int] = None
    ):
        super().__init__(name="simulator")
        self.params = params or SimParams()
        self.policy = policy or PolicyParams()
        self.world = PenWorld.create(self.params, seed)
        self.seed = self.params.seed if seed is None else seed

    @property
    def channel_names(self) -> List[str]:
        return list(CHANNEL_NAMES)

    def frames(self, steps: int) -> Iterable[SensorFrame]:
        """프레임 생성기"""
        for _ in range(steps):
            action = wall_follow_policy(self.world, self.policy)
            frame, _ = step_sim(self.world, action, self.policy)
            yield frame

    def collect(
        self,
        steps: Optional[int] = None,
        progress: Optional[Callable[[Iterable], Iterable]] = None
    ) -> SensorLog:
        """
        steps 스텝 수집

        Args:
            steps: 스텝 수 (≥ 1)
            progress: 반복자 래퍼 (예: ProgressTracker.iterate)
        """
        if steps is None or steps < 1:
            raise ConfigurationError(f"스텝 수는 1 이상이어야 합니다: {steps}")

        width = len(CHANNEL_NAMES)
        channels = np.empty((steps, width))
        actions = np.empty(steps, dtype=np.int64)
        step_ids = np.empty(steps, dtype=np.int64)

        iterator = self.frames(steps)
        if progress is not None:
            iterator = progress(iterator)

        for i, frame in enumerate(iterator):
            channels[i] = frame.channels
            actions[i] = frame.action
            step_ids[i] = frame.step

        self.logger.info(
            f"시뮬레이션 {steps:,} 스텝 완료 (무작위 행동 {self.world.random_actions:,}회, "
            f"냉각 정지 {len(self.world.pause_starts)}회)"
        )
        return SensorLog(self.channel_names, step_ids, actions, channels)

    def pause_intervals(self) -> List[Tuple[int, int]]:
        """냉각 정지 구간 [시작, 끝) 목록"""
        return [(start, start + self.params.pause_steps) for start in self.world.pause_starts]
