"""Simulated vehicle: motors, gear trains, encoders, kinematics, sensors.

The model is deliberately small. Drive is a first-order lag anchored so that
full duty settles at the platform's 1.12 m/s top speed; steering is
rate-controlled with a hard mechanical clamp; the chassis follows the
kinematic bicycle model. Both encoder shafts spin through gear ratios, and
every quarter-step boundary they cross during a step becomes one quadrature
phase edge handed to the firmware, so the firmware decodes exactly what real
interrupt pins would have seen.

Sensor models live here too: a planar 360-beam LIDAR raycast against a
segment world, and a 9-DOF IMU sampled in the Razor convention (x forward,
y right, z down) for the host to remap.

Nothing here reads a clock; the plant advances only through explicit
step(dt) calls, so identical inputs give identical trajectories bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .msgs import (
    LIDAR_BEAMS,
    ImuSample,
    EulerAngles,
    FrameId,
    LaserScan,
    Vector3,
)
from .quadrature import PhasePair
from .rotation import euler_to_quaternion

GRAVITY_MPS2 = 9.81


@dataclass(frozen=True, slots=True)
class PlantConfig:
    """Physical parameters. Defaults describe the reference platform; the
    gear ratios, wheelbase, steering limit and time constants are tunable
    because the mechanical drawings leave them open."""

    wheel_radius: float = 0.1
    v_max: float = 1.12
    wheelbase: float = 0.8
    steer_limit: float = 0.5
    drive_gear_ratio: float = 5.0
    steer_gear_ratio: float = 3.0
    encoder_ppr: int = 600
    drive_time_constant: float = 0.3
    steer_rate_gain: float = 2.0
    v_bat_drive: float = 9.6
    v_bat_steer: float = 9.0

    def __post_init__(self) -> None:
        for name in (
            "wheel_radius", "v_max", "wheelbase", "steer_limit",
            "drive_gear_ratio", "steer_gear_ratio", "encoder_ppr",
            "drive_time_constant", "steer_rate_gain", "v_bat_drive",
            "v_bat_steer",
        ):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"PlantConfig.{name} must be positive, got {v!r}")
        if self.steer_limit >= math.pi / 2:
            raise ValueError("steer_limit must be below pi/2")


@dataclass(frozen=True, slots=True)
class LidarConfig:
    """Scanner class: publish rate and maximum usable range."""

    rate_hz: float = 5.0
    range_max: float = 5.0

    def __post_init__(self) -> None:
        if self.rate_hz <= 0 or self.range_max <= 0:
            raise ValueError("LidarConfig fields must be positive")


LIDAR_PRESETS = {
    "neato": LidarConfig(rate_hz=5.0, range_max=5.0),
    "ydlidar": LidarConfig(rate_hz=8.0, range_max=10.0),
}


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Full simulation state vector at one instant."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    steer_angle: float = 0.0
    drive_shaft_angle: float = 0.0
    steer_shaft_angle: float = 0.0
    stamp: float = 0.0


@dataclass(frozen=True, slots=True)
class WorldModel:
    """Obstacles as 2D wall segments, meters, world frame."""

    segments: tuple[tuple[float, float, float, float], ...] = ()

    def __post_init__(self) -> None:
        segs = tuple(
            (float(x1), float(y1), float(x2), float(y2))
            for (x1, y1, x2, y2) in self.segments
        )
        for seg in segs:
            if not all(math.isfinite(c) for c in seg):
                raise ValueError(f"segment has non-finite coordinate: {seg}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> "WorldModel":
        """Parse the world file format: one "x1 y1 x2 y2" segment per line,
        blank lines and '#' comments ignored."""
        segments = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(
                    f"{source}:{lineno}: expected 'x1 y1 x2 y2', got {raw.strip()!r}"
                )
            try:
                segments.append(tuple(float(p) for p in parts))
            except ValueError:
                raise ValueError(
                    f"{source}:{lineno}: non-numeric coordinate in {raw.strip()!r}"
                ) from None
        return cls(tuple(segments))

    @classmethod
    def from_file(cls, path) -> "WorldModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), source=str(path))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.segments, dtype=np.float64).reshape(-1, 4)


# ---------------------------------------------------------------------------
# Pure stepping operations
# ---------------------------------------------------------------------------


def pwm_to_voltage(duty: float, v_bat: float) -> float:
    """H-bridge output voltage: exactly linear in duty, sign included."""
    if not (-1.0 <= duty <= 1.0):
        raise ValueError(f"duty {duty!r} outside [-1, 1]")
    return duty * v_bat


def step_drive(v: float, duty: float, dt: float, cfg: PlantConfig) -> float:
    """First-order lag toward the duty's steady-state speed.

    v' = v + (duty * v_max - v) * (1 - exp(-dt / tau)); the result never
    exceeds v_max in magnitude.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_ss = duty * cfg.v_max
    alpha = 1.0 - math.exp(-dt / cfg.drive_time_constant)
    v_new = v + (v_ss - v) * alpha
    if v_new > cfg.v_max:
        return cfg.v_max
    if v_new < -cfg.v_max:
        return -cfg.v_max
    return v_new


def step_steering(delta: float, duty: float, dt: float, cfg: PlantConfig) -> float:
    """Rate-controlled steering: delta' = clamp(delta + gain*duty*dt)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = delta + cfg.steer_rate_gain * duty * dt
    lim = cfg.steer_limit
    return -lim if out < -lim else (lim if out > lim else out)


def step_kinematics(s: VehicleState, dt: float, cfg: PlantConfig) -> VehicleState:
    """Kinematic bicycle step: explicit Euler, all rates from the incoming
    state. The steering shaft has no integrator of its own; it tracks the
    steering angle through the gear ratio."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return VehicleState(
        x=s.x + s.speed * math.cos(s.heading) * dt,
        y=s.y + s.speed * math.sin(s.heading) * dt,
        heading=s.heading + (s.speed / cfg.wheelbase) * math.tan(s.steer_angle) * dt,
        speed=s.speed,
        steer_angle=s.steer_angle,
        drive_shaft_angle=s.drive_shaft_angle
        + (s.speed / cfg.wheel_radius) * cfg.drive_gear_ratio * dt,
        steer_shaft_angle=s.steer_angle * cfg.steer_gear_ratio,
        stamp=s.stamp + dt,
    )


def encoder_edge_codes(angle_prev: float, angle_curr: float, ppr: int) -> np.ndarray:
    """Quadrature state codes for every quarter-step boundary crossed
    between the two shaft angles, in crossing order (uint8 array)."""
    return _kernels.encoder_edge_states(angle_prev, angle_curr, ppr)


def encoder_edges(angle_prev: float, angle_curr: float, ppr: int) -> list[PhasePair]:
    """Same as encoder_edge_codes but as PhasePair objects."""
    return [PhasePair.from_code(int(c)) for c in encoder_edge_codes(angle_prev, angle_curr, ppr)]


# ---------------------------------------------------------------------------
# Sensors
# ---------------------------------------------------------------------------


def scan_lidar(
    world: WorldModel,
    pose: tuple[float, float, float],
    lidar: LidarConfig = LIDAR_PRESETS["neato"],
    stamp: float = 0.0,
) -> LaserScan:
    """Cast 360 rays at 1 degree spacing, counterclockwise from the heading.

    Each beam reports the nearest segment hit within range; misses and
    out-of-range hits are invalid (range 0.0, valid False).
    """
    x, y, theta = pose
    ranges = _kernels.raycast_scan(
        x, y, theta, LIDAR_BEAMS, lidar.range_max, world.as_array()
    )
    return LaserScan(
        ranges=tuple(float(r) for r in ranges),
        valid=tuple(r > 0.0 for r in ranges),
        stamp=stamp,
        range_max=lidar.range_max,
    )


def sample_imu(prev: VehicleState, curr: VehicleState, dt: float) -> ImuSample:
    """9-DOF sample in the Razor convention (x forward, y right, z down).

    Gravity appears as +9.81 on z (down is positive); yaw rate flips sign
    relative to the world's counterclockwise heading; the magnetometer sees
    world +x as north. Rates come from finite differences of the two states.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    theta = curr.heading
    yaw_rate = (curr.heading - prev.heading) / dt
    accel_long = (curr.speed - prev.speed) / dt
    return ImuSample(
        accel=Vector3(accel_long, 0.0, GRAVITY_MPS2),
        gyro=Vector3(0.0, 0.0, -yaw_rate),
        mag=Vector3(math.cos(theta), math.sin(theta), 0.0),
        orientation=euler_to_quaternion(EulerAngles(0.0, 0.0, -theta)),
        frame=FrameId.RAZOR,
        stamp=curr.stamp,
    )


# ---------------------------------------------------------------------------
# The plant proper
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PlantStepResult:
    """Phase-edge batches produced during one step, ready for mcu_tick."""

    steer_edges: np.ndarray
    drive_edges: np.ndarray


class Plant:
    """Single-owner mutable vehicle, advanced only by step().

    step() applies the commanded duties for dt seconds and returns the
    quadrature edges both encoders emitted along the way.
    """

    def __init__(
        self,
        config: PlantConfig | None = None,
        world: WorldModel | None = None,
        lidar: LidarConfig | None = None,
        initial_state: VehicleState | None = None,
    ) -> None:
        self.config = config or PlantConfig()
        self.world = world or WorldModel()
        self.lidar = lidar or LIDAR_PRESETS["neato"]
        self._state = initial_state or VehicleState()

    @property
    def state(self) -> VehicleState:
        return self._state

    def step(self, steer_duty: float, drive_duty: float, dt: float) -> PlantStepResult:
        if not (-1.0 <= steer_duty <= 1.0 and -1.0 <= drive_duty <= 1.0):
            raise ValueError("duties must be in [-1, 1]")
        cfg = self.config
        s = self._state
        moved = replace(
            s,
            steer_angle=step_steering(s.steer_angle, steer_duty, dt, cfg),
            speed=step_drive(s.speed, drive_duty, dt, cfg),
        )
        new = step_kinematics(moved, dt, cfg)
        result = PlantStepResult(
            steer_edges=encoder_edge_codes(
                s.steer_shaft_angle, new.steer_shaft_angle, cfg.encoder_ppr
            ),
            drive_edges=encoder_edge_codes(
                s.drive_shaft_angle, new.drive_shaft_angle, cfg.encoder_ppr
            ),
        )
        self._state = new
        return result

    def scan(self, stamp: float = 0.0) -> LaserScan:
        s = self._state
        return scan_lidar(self.world, (s.x, s.y, s.heading), self.lidar, stamp)
