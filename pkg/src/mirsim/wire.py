"""Serial link framing and binary message codecs.

The control unit talks to the host over a byte stream. Each message rides in
one checksummed frame:

    0xFF 0xFE | len:u16 LE | ck(len) | topic_id:u16 LE | payload | ck(topic+payload)

where ck(bytes) = 255 - (sum(bytes) mod 256), the classic complement checksum.
``len`` counts payload bytes only, so a full frame is 8 + len bytes.

Payload encodings are little-endian throughout: float64 as IEEE 754 binary64,
integers two's-complement, variable-length lists prefixed with a u16 element
count. The per-schema field order is fixed and documented in docs/protocol.md;
deserialize(serialize(m)) returns m bit-exactly.

The decoder is stream-oriented: bytes can arrive in arbitrary chunks, and the
frame boundary is recovered by scanning for the sync word. A corrupted frame
is dropped and counted, and scanning resumes right after its sync word, so a
genuine frame that starts inside the corrupted region is still found. One
consequence worth knowing: if a byte stream is damaged, any complete valid
frame embedded in the damaged region (say, inside a payload) can surface as a
frame of its own. Framing checksums cannot tell those apart; consumers that
care use the per-publisher seq field.
"""

from __future__ import annotations

import enum
import struct
from collections import deque
from dataclasses import dataclass
from random import Random
from typing import Callable, Iterable

from .errors import WireDecodeError
from .msgs import (
    LIDAR_BEAMS,
    CameraFrameStub,
    EncoderPulse,
    FrameId,
    Heartbeat,
    ImuSample,
    JoyState,
    LaserScan,
    Quaternion,
    VehicleControl,
    Vector3,
)

SYNC1 = 0xFF
SYNC2 = 0xFE
_SYNC = bytes((SYNC1, SYNC2))

# Upper bound on payload size accepted by encoder and decoder. Sized to hold
# the largest in-scope message (a full LaserScan serializes to 3276 bytes)
# with headroom; also the decoder's defense against absurd length fields.
MAX_PAYLOAD = 4096

# Canonical link topic numbers.
TOPIC_VEHICLE_CONTROL = 1
TOPIC_ENCODER_PULSE = 2
TOPIC_IMU = 3
TOPIC_SCAN = 4
TOPIC_HEARTBEAT = 5
# Host-side-only topics; never cross the serial link but need stable ids so
# recordings can tag every payload the same way.
TOPIC_JOY = 6
TOPIC_CAMERA_STUB = 7


def checksum(data: Iterable[int]) -> int:
    """Complement checksum: 255 - (byte sum mod 256).

    The defining property is that sum(data) + checksum(data) == 255 mod 256,
    which is what the decoder verifies.
    """
    return 255 - (sum(data) % 256)


@dataclass(frozen=True, slots=True)
class Frame:
    """One unit on the serial link: a topic number plus an opaque payload."""

    topic_id: int
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not (0 <= self.topic_id <= 0xFFFF):
            raise ValueError(f"topic_id {self.topic_id} outside u16 range")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(
                f"payload of {len(self.payload)} bytes exceeds the {MAX_PAYLOAD} byte cap"
            )
        if not isinstance(self.payload, bytes):
            object.__setattr__(self, "payload", bytes(self.payload))


def encode_frame(frame: Frame) -> bytes:
    """Render a frame to its exact wire bytes."""
    header = struct.pack("<H", len(frame.payload))
    body = struct.pack("<H", frame.topic_id) + frame.payload
    return b"".join(
        (
            _SYNC,
            header,
            bytes((checksum(header),)),
            body,
            bytes((checksum(body),)),
        )
    )


class DecoderState(enum.Enum):
    """What byte the stream decoder is waiting for next."""

    SYNC1 = "sync1"
    SYNC2 = "sync2"
    LEN = "len"
    LEN_CK = "len_ck"
    TOPIC = "topic"
    PAYLOAD = "payload"
    CK = "ck"


class StreamDecoder:
    """Incremental frame extractor for an unreliable byte stream.

    feed() accepts bytes in whatever chunks the transport produces and
    returns every frame completed so far; the split into chunks never
    changes what is decoded. Counters:

      frames_ok            complete frames delivered
      frames_bad_checksum  frames dropped for a failed length or body checksum
      bytes_skipped        bytes discarded while hunting for a sync word
                           (leading garbage, and the remains of a dropped
                           frame past its sync word)

    After a checksum failure the two sync bytes themselves are consumed
    silently (the failure is already accounted for in frames_bad_checksum)
    and the scan restarts on the byte after them.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.frames_ok = 0
        self.frames_bad_checksum = 0
        self.bytes_skipped = 0

    @property
    def state(self) -> DecoderState:
        buf = self._buf
        n = len(buf)
        if n == 0:
            return DecoderState.SYNC1
        if n == 1:
            return DecoderState.SYNC2
        if n < 4:
            return DecoderState.LEN
        if n == 4:
            return DecoderState.LEN_CK
        if n < 7:
            return DecoderState.TOPIC
        length = buf[2] | (buf[3] << 8)
        if n < 7 + length:
            return DecoderState.PAYLOAD
        return DecoderState.CK

    def feed(self, data: bytes) -> list[Frame]:
        """Absorb a chunk and return all frames it completes, in order."""
        self._buf += data
        out: list[Frame] = []
        buf = self._buf
        while True:
            start = buf.find(_SYNC)
            if start < 0:
                # No sync word. Everything here is garbage except a trailing
                # lone 0xFF, which may pair with the first byte of the next
                # chunk.
                keep = 1 if buf[-1:] == b"\xff" else 0
                drop = len(buf) - keep
                if drop:
                    self.bytes_skipped += drop
                    del buf[:drop]
                return out
            if start:
                self.bytes_skipped += start
                del buf[:start]
            if len(buf) < 5:
                return out  # header incomplete, wait for more bytes
            length = buf[2] | (buf[3] << 8)
            if checksum(buf[2:4]) != buf[4]:
                self.frames_bad_checksum += 1
                del buf[:2]
                continue
            if length > MAX_PAYLOAD:
                # Header checksum holds but no peer sends frames this big;
                # treat the sync word as garbage that happened to look real.
                self.bytes_skipped += 2
                del buf[:2]
                continue
            total = 8 + length
            if len(buf) < total:
                return out
            body = buf[5 : 7 + length]
            if checksum(body) != buf[total - 1]:
                self.frames_bad_checksum += 1
                del buf[:2]
                continue
            out.append(Frame(body[0] | (body[1] << 8), bytes(body[2:])))
            self.frames_ok += 1
            del buf[:total]


# ---------------------------------------------------------------------------
# Payload codecs
# ---------------------------------------------------------------------------

_VEHICLE_CONTROL = struct.Struct("<dddI")  # steering, throttle, stamp, seq
_ENCODER_PULSE = struct.Struct("<qqdI")  # drive_count, steer_count, stamp, seq
_IMU = struct.Struct("<3d3d3d4dBd")  # accel, gyro, mag, quat wxyz, frame, stamp
_HEARTBEAT = struct.Struct("<7IdI")  # seven counters, stamp, seq
_CAMERA_STUB = struct.Struct("<Id")  # frame_index, stamp
_U16 = struct.Struct("<H")
_F64 = struct.Struct("<d")


def _pack_f64_list(values: Iterable[float]) -> bytes:
    seq = tuple(values)
    return _U16.pack(len(seq)) + struct.pack(f"<{len(seq)}d", *seq)


def _pack_u8_list(values: Iterable[int]) -> bytes:
    seq = bytes(values)
    return _U16.pack(len(seq)) + seq


class _Cursor:
    """Reads fixed-layout fields out of a payload, tracking position."""

    def __init__(self, payload: bytes, label: str) -> None:
        self.payload = payload
        self.pos = 0
        self.label = label

    def take(self, fmt: struct.Struct) -> tuple:
        end = self.pos + fmt.size
        if end > len(self.payload):
            raise WireDecodeError(
                f"{self.label}: payload truncated at byte {self.pos} "
                f"(need {fmt.size} more, have {len(self.payload) - self.pos})"
            )
        out = fmt.unpack_from(self.payload, self.pos)
        self.pos = end
        return out

    def take_f64_list(self) -> tuple[float, ...]:
        (count,) = self.take(_U16)
        end = self.pos + 8 * count
        if end > len(self.payload):
            raise WireDecodeError(
                f"{self.label}: list claims {count} float64s but only "
                f"{len(self.payload) - self.pos} bytes remain"
            )
        out = struct.unpack_from(f"<{count}d", self.payload, self.pos)
        self.pos = end
        return out

    def take_u8_list(self) -> bytes:
        (count,) = self.take(_U16)
        end = self.pos + count
        if end > len(self.payload):
            raise WireDecodeError(
                f"{self.label}: list claims {count} bytes but only "
                f"{len(self.payload) - self.pos} remain"
            )
        out = self.payload[self.pos : end]
        self.pos = end
        return out

    def finish(self) -> None:
        if self.pos != len(self.payload):
            raise WireDecodeError(
                f"{self.label}: {len(self.payload) - self.pos} trailing bytes "
                f"after a complete message"
            )


def _encode_vehicle_control(m: VehicleControl) -> bytes:
    return _VEHICLE_CONTROL.pack(m.steering, m.throttle, m.stamp, m.seq)


def _decode_vehicle_control(p: bytes, label: str) -> VehicleControl:
    c = _Cursor(p, label)
    steering, throttle, stamp, seq = c.take(_VEHICLE_CONTROL)
    c.finish()
    return VehicleControl(steering=steering, throttle=throttle, stamp=stamp, seq=seq)


def unpack_vehicle_control_raw(payload: bytes) -> tuple[float, float, float, int]:
    """Read a /vehicle_control payload without constructing the message.

    Returns (steering, throttle, stamp, seq) exactly as sent. The
    VehicleControl constructor clamps its fields, so an endpoint that wants
    to notice out-of-range commands (and count them) has to look at the raw
    floats first.
    """
    c = _Cursor(payload, "VehicleControl")
    fields = c.take(_VEHICLE_CONTROL)
    c.finish()
    return fields


def _encode_encoder_pulse(m: EncoderPulse) -> bytes:
    return _ENCODER_PULSE.pack(m.drive_count, m.steer_count, m.stamp, m.seq)


def _decode_encoder_pulse(p: bytes, label: str) -> EncoderPulse:
    c = _Cursor(p, label)
    drive, steer, stamp, seq = c.take(_ENCODER_PULSE)
    c.finish()
    return EncoderPulse(drive_count=drive, steer_count=steer, stamp=stamp, seq=seq)


def _encode_imu(m: ImuSample) -> bytes:
    return _IMU.pack(
        m.accel.x, m.accel.y, m.accel.z,
        m.gyro.x, m.gyro.y, m.gyro.z,
        m.mag.x, m.mag.y, m.mag.z,
        m.orientation.w, m.orientation.x, m.orientation.y, m.orientation.z,
        int(m.frame), m.stamp,
    )


def _decode_imu(p: bytes, label: str) -> ImuSample:
    c = _Cursor(p, label)
    v = c.take(_IMU)
    c.finish()
    try:
        frame = FrameId(v[13])
    except ValueError as exc:
        raise WireDecodeError(f"{label}: unknown frame tag {v[13]}") from exc
    return ImuSample(
        accel=Vector3(*v[0:3]),
        gyro=Vector3(*v[3:6]),
        mag=Vector3(*v[6:9]),
        orientation=Quaternion(*v[9:13]),
        frame=frame,
        stamp=v[14],
    )


def _encode_scan(m: LaserScan) -> bytes:
    return b"".join(
        (
            _F64.pack(m.angle_min),
            _F64.pack(m.angle_increment),
            _pack_f64_list(m.ranges),
            _F64.pack(m.range_max),
            _pack_u8_list(int(v) for v in m.valid),
            _F64.pack(m.stamp),
        )
    )


def _decode_scan(p: bytes, label: str) -> LaserScan:
    c = _Cursor(p, label)
    (angle_min,) = c.take(_F64)
    (angle_increment,) = c.take(_F64)
    ranges = c.take_f64_list()
    (range_max,) = c.take(_F64)
    valid = c.take_u8_list()
    (stamp,) = c.take(_F64)
    c.finish()
    if len(ranges) != LIDAR_BEAMS or len(valid) != LIDAR_BEAMS:
        raise WireDecodeError(
            f"{label}: expected {LIDAR_BEAMS} beams, got {len(ranges)} ranges "
            f"and {len(valid)} flags"
        )
    return LaserScan(
        ranges=ranges,
        valid=tuple(bool(v) for v in valid),
        stamp=stamp,
        angle_min=angle_min,
        angle_increment=angle_increment,
        range_max=range_max,
    )


def _encode_heartbeat(m: Heartbeat) -> bytes:
    return _HEARTBEAT.pack(
        m.frames_ok, m.frames_bad_checksum, m.bytes_skipped,
        m.invalid_transitions, m.clamp_events, m.stale_drops,
        m.malformed_drops, m.stamp, m.seq,
    )


def _decode_heartbeat(p: bytes, label: str) -> Heartbeat:
    c = _Cursor(p, label)
    v = c.take(_HEARTBEAT)
    c.finish()
    return Heartbeat(
        frames_ok=v[0], frames_bad_checksum=v[1], bytes_skipped=v[2],
        invalid_transitions=v[3], clamp_events=v[4], stale_drops=v[5],
        malformed_drops=v[6], stamp=v[7], seq=v[8],
    )


def _encode_joy(m: JoyState) -> bytes:
    return b"".join(
        (
            _pack_f64_list(m.axes),
            _pack_u8_list(m.buttons),
            _F64.pack(m.stamp),
        )
    )


def _decode_joy(p: bytes, label: str) -> JoyState:
    c = _Cursor(p, label)
    axes = c.take_f64_list()
    buttons = c.take_u8_list()
    (stamp,) = c.take(_F64)
    c.finish()
    return JoyState(axes=axes, buttons=tuple(buttons), stamp=stamp)


def _encode_camera_stub(m: CameraFrameStub) -> bytes:
    return _CAMERA_STUB.pack(m.frame_index, m.stamp)


def _decode_camera_stub(p: bytes, label: str) -> CameraFrameStub:
    c = _Cursor(p, label)
    frame_index, stamp = c.take(_CAMERA_STUB)
    c.finish()
    return CameraFrameStub(frame_index=frame_index, stamp=stamp)


_ENCODERS: dict[type, Callable] = {
    VehicleControl: _encode_vehicle_control,
    EncoderPulse: _encode_encoder_pulse,
    ImuSample: _encode_imu,
    LaserScan: _encode_scan,
    Heartbeat: _encode_heartbeat,
    JoyState: _encode_joy,
    CameraFrameStub: _encode_camera_stub,
}

_DECODERS: dict[type, Callable] = {
    VehicleControl: _decode_vehicle_control,
    EncoderPulse: _decode_encoder_pulse,
    ImuSample: _decode_imu,
    LaserScan: _decode_scan,
    Heartbeat: _decode_heartbeat,
    JoyState: _decode_joy,
    CameraFrameStub: _decode_camera_stub,
}


def serialize(msg) -> bytes:
    """Encode a message to its payload bytes. Schema is taken from the type."""
    enc = _ENCODERS.get(type(msg))
    if enc is None:
        raise TypeError(f"no wire encoding registered for {type(msg).__name__}")
    return enc(msg)


def deserialize(payload: bytes, schema: type):
    """Decode payload bytes as the given schema.

    Raises WireDecodeError for truncated, oversized, or internally
    inconsistent payloads; the error message names the schema.
    """
    dec = _DECODERS.get(schema)
    if dec is None:
        raise TypeError(f"no wire decoding registered for {schema!r}")
    label = schema.__name__
    try:
        return dec(payload, label)
    except (ValueError, OverflowError) as exc:
        # Constructor-level invariant violations (bad enum, out-of-range
        # field) are decode failures from the caller's point of view.
        raise WireDecodeError(f"{label}: {exc}") from exc


# ---------------------------------------------------------------------------
# Topic registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TopicEntry:
    topic_id: int
    name: str
    schema: type


class TopicRegistry:
    """Bijective topic_id <-> (name, schema) table, fixed for a session."""

    def __init__(self, entries: Iterable[TopicEntry]) -> None:
        self._by_id: dict[int, TopicEntry] = {}
        self._by_name: dict[str, TopicEntry] = {}
        for e in entries:
            if e.topic_id in self._by_id:
                raise ValueError(f"duplicate topic id {e.topic_id}")
            if e.name in self._by_name:
                raise ValueError(f"duplicate topic name {e.name!r}")
            self._by_id[e.topic_id] = e
            self._by_name[e.name] = e

    def by_id(self, topic_id: int) -> TopicEntry:
        try:
            return self._by_id[topic_id]
        except KeyError:
            raise KeyError(f"unknown topic id {topic_id}") from None

    def by_name(self, name: str) -> TopicEntry:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown topic name {name!r}") from None

    def __contains__(self, topic_id: int) -> bool:
        return topic_id in self._by_id

    def entries(self) -> tuple[TopicEntry, ...]:
        return tuple(self._by_id[k] for k in sorted(self._by_id))

    def decode_frame(self, frame: Frame):
        """Deserialize a frame's payload per its registered schema."""
        return deserialize(frame.payload, self.by_id(frame.topic_id).schema)

    def encode_message(self, name: str, msg) -> Frame:
        """Serialize a message into a frame for the named topic."""
        entry = self.by_name(name)
        if type(msg) is not entry.schema:
            raise TypeError(
                f"topic {name!r} carries {entry.schema.__name__}, got {type(msg).__name__}"
            )
        return Frame(entry.topic_id, serialize(msg))


#: Topics 1-5 cross the serial link; 6 and 7 exist so host-only streams can
#: be recorded with the same payload encoding and a stable numeric id.
DEFAULT_TOPICS = TopicRegistry(
    [
        TopicEntry(TOPIC_VEHICLE_CONTROL, "/vehicle_control", VehicleControl),
        TopicEntry(TOPIC_ENCODER_PULSE, "/encoder_pulse", EncoderPulse),
        TopicEntry(TOPIC_IMU, "/imu", ImuSample),
        TopicEntry(TOPIC_SCAN, "/scan", LaserScan),
        TopicEntry(TOPIC_HEARTBEAT, "/heartbeat", Heartbeat),
        TopicEntry(TOPIC_JOY, "/joy", JoyState),
        TopicEntry(TOPIC_CAMERA_STUB, "/camera_stub", CameraFrameStub),
    ]
)


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------


class BytePipe:
    """One-directional in-process byte stream.

    Models the serial cable: bytes written with send() become readable with
    recv() after ``latency_ticks`` calls to tick(); each byte is independently
    dropped with probability ``drop_probability``. Defaults are a perfect,
    instantaneous pipe. Loss is driven by a private seeded generator, so a
    given (seed, traffic) pair always drops the same bytes.
    """

    def __init__(
        self,
        latency_ticks: int = 0,
        drop_probability: float = 0.0,
        seed: int = 0,
    ) -> None:
        if latency_ticks < 0:
            raise ValueError("latency_ticks must be >= 0")
        if not (0.0 <= drop_probability <= 1.0):
            raise ValueError("drop_probability must be in [0, 1]")
        self.latency_ticks = latency_ticks
        self.drop_probability = drop_probability
        self._rng = Random(seed)
        self._now = 0
        self._pending: deque[tuple[int, int]] = deque()  # (deliverable_at, byte)
        self.bytes_sent = 0
        self.bytes_dropped = 0

    def send(self, data: bytes) -> None:
        due = self._now + self.latency_ticks
        p = self.drop_probability
        for b in data:
            self.bytes_sent += 1
            if p and self._rng.random() < p:
                self.bytes_dropped += 1
                continue
            self._pending.append((due, b))

    def tick(self, ticks: int = 1) -> None:
        self._now += ticks

    def recv(self) -> bytes:
        out = bytearray()
        pending = self._pending
        while pending and pending[0][0] <= self._now:
            out.append(pending.popleft()[1])
        return bytes(out)
