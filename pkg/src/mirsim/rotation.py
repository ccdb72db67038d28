"""Rotation math and IMU coordinate-frame conversion.

Attitude convention throughout the package: intrinsic Z-Y-X, i.e. yaw about
z, then pitch about the rotated y, then roll about the twice-rotated x.
Pitch is reported in [-pi/2, pi/2]; at gimbal lock roll is forced to 0 and
the residual rotation folds into yaw, so round trips stay deterministic.
"""

from __future__ import annotations

import math

from .errors import InvalidStateError
from .msgs import EulerAngles, FrameId, ImuSample, Quaternion, Vector3

_GIMBAL_EPS = 1e-12
# Loose enough to accept quaternions whose components were rounded to four
# decimals (norm error up to ~1e-5); clearly non-unit inputs still raise.
# The input is renormalized before conversion either way.
_UNIT_NORM_TOL = 1e-4


def euler_to_quaternion(e: EulerAngles) -> Quaternion:
    """Unit quaternion for the intrinsic Z-Y-X rotation (yaw, pitch, roll)."""
    if not all(map(math.isfinite, (e.roll, e.pitch, e.yaw))):
        raise ValueError(f"non-finite euler angles: {e}")
    cr = math.cos(e.roll * 0.5)
    sr = math.sin(e.roll * 0.5)
    cp = math.cos(e.pitch * 0.5)
    sp = math.sin(e.pitch * 0.5)
    cy = math.cos(e.yaw * 0.5)
    sy = math.sin(e.yaw * 0.5)
    return Quaternion(
        w=cr * cp * cy + sr * sp * sy,
        x=sr * cp * cy - cr * sp * sy,
        y=cr * sp * cy + sr * cp * sy,
        z=cr * cp * sy - sr * sp * cy,
    )


def quaternion_to_euler(q: Quaternion) -> EulerAngles:
    """Inverse of euler_to_quaternion, up to quaternion sign.

    The input must be a unit quaternion (norm within 1e-4 of 1; it is
    renormalized before use). At |pitch| = pi/2 the roll/yaw split is
    degenerate; this returns roll = 0 with the remainder folded into yaw.
    """
    n = q.norm()
    if abs(n - 1.0) >= _UNIT_NORM_TOL:
        raise ValueError(f"quaternion norm {n} too far from 1 to convert")
    w, x, y, z = q.w / n, q.x / n, q.y / n, q.z / n

    sinp = 2.0 * (w * y - z * x)
    if abs(sinp) >= 1.0 - _GIMBAL_EPS:
        # Gimbal lock: only yaw -/+ roll is observable; put it all in yaw.
        pitch = math.copysign(math.pi / 2.0, sinp)
        return EulerAngles(roll=0.0, pitch=pitch, yaw=2.0 * math.atan2(z, w))

    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = math.asin(sinp)
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return EulerAngles(roll=roll, pitch=pitch, yaw=yaw)


def remap_razor_to_rep103(v: Vector3) -> Vector3:
    """Map a vector between the sensor frame (x fwd, y right, z down) and
    the host frame (x fwd, y left, z up). The map is its own inverse and
    preserves the norm exactly."""
    return Vector3(v.x, -v.y, -v.z)


def _remap_quaternion(q: Quaternion) -> Quaternion:
    # Conjugation by the pi rotation about x that relates the two frames:
    # components along the flipped axes change sign.
    return Quaternion(q.w, q.x, -q.y, -q.z)


def imu_to_rep103(s: ImuSample) -> ImuSample:
    """Re-express a RAZOR-frame sample in the REP103 convention.

    Vectors are axis-remapped; the orientation quaternion is conjugated so
    that rotating REP103 basis vectors reproduces the same physical
    attitude. Applying this to a sample already in REP103 raises
    InvalidStateError rather than silently double-converting.
    """
    if s.frame != FrameId.RAZOR:
        raise InvalidStateError(f"sample already in frame {s.frame.name}")
    return ImuSample(
        accel=remap_razor_to_rep103(s.accel),
        gyro=remap_razor_to_rep103(s.gyro),
        mag=remap_razor_to_rep103(s.mag),
        orientation=_remap_quaternion(s.orientation),
        frame=FrameId.REP103,
        stamp=s.stamp,
    )
