"""Message schemas shared by every node in the graph.

All types are immutable value objects: once constructed they can be handed
between threads, queued on the bus, serialized onto the serial link or
written to a recording without further synchronization. Binary layouts live
in mirsim.wire and are documented in docs/protocol.md.

Timestamps are float64 seconds since the simulation epoch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

Timestamp = float


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


class FrameId(enum.IntEnum):
    """Coordinate convention of an IMU sample.

    RAZOR: x forward, y right, z down (the sensor's native frame).
    REP103: x forward, y left, z up (the host-side convention).
    """

    RAZOR = 0
    REP103 = 1


@dataclass(frozen=True, slots=True)
class Vector3:
    """3-vector; units depend on context (m/s^2 accel, rad/s gyro, magnetometer a.u.)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        _require_finite("Vector3 component", self.x, self.y, self.z)


VECTOR3_ZERO = Vector3(0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Orientation quaternion, scalar first."""

    w: float
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)


QUATERNION_IDENTITY = Quaternion(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class EulerAngles:
    """Attitude as intrinsic Z-Y-X (yaw, pitch, roll) angles in radians."""

    roll: float
    pitch: float
    yaw: float

    def __post_init__(self) -> None:
        _require_finite("Euler angle", self.roll, self.pitch, self.yaw)


@dataclass(frozen=True, slots=True)
class JoyState:
    """One joystick sample.

    axes[0] is the steering axis, axes[1] the throttle axis; every axis is
    in [-1, 1]. buttons hold 0/1 states.
    """

    axes: tuple[float, ...]
    buttons: tuple[int, ...] = ()
    stamp: Timestamp = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(float(a) for a in self.axes))
        object.__setattr__(self, "buttons", tuple(int(b) for b in self.buttons))
        for a in self.axes:
            if not (-1.0 <= a <= 1.0):
                raise ValueError(f"joystick axis {a!r} outside [-1, 1]")
        for b in self.buttons:
            if b not in (0, 1):
                raise ValueError(f"joystick button {b!r} not in {{0, 1}}")


def _clamp_unit(v: float) -> float:
    return -1.0 if v < -1.0 else (1.0 if v > 1.0 else v)


@dataclass(frozen=True, slots=True)
class VehicleControl:
    """Normalized drive-by-wire command.

    steering: [-1, 1], +1 is full left. throttle: [-1, 1], +1 is full
    forward. Both are clamped on construction, so a constructed message
    always satisfies the range invariant; the firmware counts clamp events
    on its raw receive path before this type is built.
    """

    steering: float
    throttle: float
    stamp: Timestamp = 0.0
    seq: int = 0

    def __post_init__(self) -> None:
        _require_finite("VehicleControl field", self.steering, self.throttle)
        object.__setattr__(self, "steering", _clamp_unit(float(self.steering)))
        object.__setattr__(self, "throttle", _clamp_unit(float(self.throttle)))
        if not (0 <= self.seq <= 0xFFFFFFFF):
            raise ValueError(f"seq {self.seq} outside u32 range")


@dataclass(frozen=True, slots=True)
class EncoderPulse:
    """Cumulative signed quadrature counts of both encoder shafts."""

    drive_count: int
    steer_count: int
    stamp: Timestamp = 0.0
    seq: int = 0

    def __post_init__(self) -> None:
        for name, c in (("drive_count", self.drive_count), ("steer_count", self.steer_count)):
            if not (-(2**63) <= c < 2**63):
                raise ValueError(f"{name} {c} outside i64 range")
        if not (0 <= self.seq <= 0xFFFFFFFF):
            raise ValueError(f"seq {self.seq} outside u32 range")


@dataclass(frozen=True, slots=True)
class ImuSample:
    """One 9-DOF IMU reading.

    The frame tag applies to accel, gyro, mag and orientation together;
    mixing conventions inside one sample is not representable.
    """

    accel: Vector3
    gyro: Vector3
    mag: Vector3
    orientation: Quaternion
    frame: FrameId
    stamp: Timestamp = 0.0


LIDAR_BEAMS = 360


@dataclass(frozen=True, slots=True)
class LaserScan:
    """Planar 360-beam scan, one beam per degree counterclockwise from the
    vehicle heading. Invalid beams carry range 0.0 and valid=False; valid
    ranges are in (0, range_max]."""

    ranges: tuple[float, ...]
    valid: tuple[bool, ...]
    stamp: Timestamp = 0.0
    angle_min: float = 0.0
    angle_increment: float = 2.0 * math.pi / LIDAR_BEAMS
    range_max: float = 5.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", tuple(float(r) for r in self.ranges))
        object.__setattr__(self, "valid", tuple(bool(v) for v in self.valid))
        if len(self.ranges) != LIDAR_BEAMS or len(self.valid) != LIDAR_BEAMS:
            raise ValueError(
                f"scan must carry {LIDAR_BEAMS} beams, got "
                f"{len(self.ranges)} ranges / {len(self.valid)} flags"
            )
        for r, ok in zip(self.ranges, self.valid):
            if ok:
                if not (0.0 < r <= self.range_max):
                    raise ValueError(f"valid range {r} outside (0, {self.range_max}]")
            elif r != 0.0:
                raise ValueError(f"invalid beam must carry range 0.0, got {r}")


@dataclass(frozen=True, slots=True)
class Heartbeat:
    """Firmware health counters, published at 1 Hz over the serial link."""

    frames_ok: int = 0
    frames_bad_checksum: int = 0
    bytes_skipped: int = 0
    invalid_transitions: int = 0
    clamp_events: int = 0
    stale_drops: int = 0
    malformed_drops: int = 0
    stamp: Timestamp = 0.0
    seq: int = 0


@dataclass(frozen=True, slots=True)
class CameraFrameStub:
    """Stand-in for a camera image: stamp plus frame counter only, keeping
    the acquisition pipeline shape without storing pixels."""

    frame_index: int = 0
    stamp: Timestamp = 0.0
