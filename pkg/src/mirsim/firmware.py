"""Emulated two-microcontroller control unit.

The real control unit is a pair of Arduinos: the master decodes the steering
encoder, drives both H-bridges, and owns the serial link to the host; the
slave decodes the drive encoder and hands its count to the master over I2C.
Here both live inside one ControlUnit object advanced by mcu_tick() at a
fixed 1 kHz, with the I2C hop modeled as a register copy that lags the
slave's true count by a configurable number of ticks (default 1).

Inbound traffic is /vehicle_control frames; outbound is /encoder_pulse at
50 Hz plus a 1 Hz /heartbeat carrying the unit's health counters. A 0.5 s
watchdog zeroes both PWM outputs whenever commands stop arriving, so a dead
host or severed link coasts the car instead of running it away.

Everything is a deterministic state machine: same tick inputs, same outputs,
byte for byte. No clocks are read and no threads are spawned here.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

from .errors import WireDecodeError
from .msgs import EncoderPulse, Heartbeat, VehicleControl
from .quadrature import PhasePair, QuadratureDecoder
from .wire import (
    TOPIC_VEHICLE_CONTROL,
    DEFAULT_TOPICS,
    Frame,
    StreamDecoder,
    TopicRegistry,
    unpack_vehicle_control_raw,
)

TICK_RATE_HZ = 1000.0
ENCODER_PUBLISH_PERIOD_S = 0.02
HEARTBEAT_PERIOD_S = 1.0
WATCHDOG_TIMEOUT_S = 0.5


@dataclass(frozen=True, slots=True)
class ChannelPins:
    """Arduino pin assignment of one H-bridge channel (named constants only;
    nothing here toggles real pins)."""

    enable: int
    pwm_a: int
    pwm_b: int


class PwmChannel(enum.Enum):
    STEER = ChannelPins(enable=8, pwm_a=6, pwm_b=5)
    DRIVE = ChannelPins(enable=12, pwm_a=9, pwm_b=10)

    @property
    def pins(self) -> ChannelPins:
        return self.value


@dataclass(frozen=True, slots=True)
class PwmCommand:
    """Signed duty for one H-bridge channel.

    duty in [-1, 1]; the sign picks the active half-bridge: positive drives
    PWMA, negative drives PWMB, magnitude is the duty cycle on that pin.
    """

    channel: PwmChannel
    duty: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.duty) or abs(self.duty) > 1.0:
            raise ValueError(f"duty {self.duty!r} outside [-1, 1]")

    @property
    def pwm_a(self) -> float:
        return self.duty if self.duty > 0.0 else 0.0

    @property
    def pwm_b(self) -> float:
        return -self.duty if self.duty < 0.0 else 0.0


@dataclass(frozen=True, slots=True)
class McuTickResult:
    """Outputs of one firmware tick: the two PWM commands, plus any frames
    (encoder pulse, heartbeat) that came due this tick."""

    steer: PwmCommand
    drive: PwmCommand
    frames: tuple[Frame, ...] = ()


_NEUTRAL = VehicleControl(steering=0.0, throttle=0.0, stamp=0.0, seq=0)


class ControlUnit:
    """Master/slave microcontroller pair as one deterministic state machine.

    Drive it by calling mcu_tick() once per 1 kHz tick with the phase-edge
    batches the plant produced during that tick. Bytes arriving from the
    host go through receive_serial(); frames to the host come back in the
    McuTickResult.

    The master sees the drive count only through the emulated I2C register,
    so its value in any published frame lags the slave's true count by
    exactly i2c_latency_ticks ticks.
    """

    def __init__(
        self,
        *,
        tick_rate_hz: float = TICK_RATE_HZ,
        publish_period_s: float = ENCODER_PUBLISH_PERIOD_S,
        heartbeat_period_s: float = HEARTBEAT_PERIOD_S,
        watchdog_timeout_s: float = WATCHDOG_TIMEOUT_S,
        i2c_latency_ticks: int = 1,
        registry: TopicRegistry = DEFAULT_TOPICS,
    ) -> None:
        if i2c_latency_ticks < 0 or i2c_latency_ticks > 255:
            raise ValueError("i2c_latency_ticks must fit in a u8")
        self.steer_decoder = QuadratureDecoder()
        self.drive_decoder = QuadratureDecoder()
        self.last_control = _NEUTRAL
        # Starts in the tripped state: until the first command arrives the
        # outputs are held at zero.
        self.watchdog_deadline = -math.inf
        self.watchdog_timeout_s = watchdog_timeout_s
        self.i2c_latency_ticks = i2c_latency_ticks
        # Ring of the slave's count at the end of each of the last L ticks;
        # the head is what the master's register holds this tick.
        self._i2c_history: deque[int] = deque([0] * i2c_latency_ticks)
        self._last_drive_view = 0
        self._registry = registry
        self._rx = StreamDecoder()
        self._tick_count = 0
        self._publish_every = max(1, round(publish_period_s * tick_rate_hz))
        self._heartbeat_every = max(1, round(heartbeat_period_s * tick_rate_hz))
        self._pulse_seq = 0
        self._heartbeat_seq = 0
        self._last_cmd_seq: int | None = None
        self.clamp_events = 0
        self.stale_drops = 0
        self.malformed_drops = 0

    # -- inbound ----------------------------------------------------------

    def receive_serial(self, data: bytes, now: float) -> None:
        """Absorb host-to-unit bytes, dispatching every complete frame."""
        for frame in self._rx.feed(data):
            self.handle_frame(frame, now)

    def handle_frame(self, frame: Frame, now: float) -> None:
        if frame.topic_id != TOPIC_VEHICLE_CONTROL:
            # The unit only subscribes to /vehicle_control; anything else on
            # its rx line is a host bug worth surfacing in the counters.
            self.malformed_drops += 1
            return
        try:
            steering, throttle, stamp, seq = unpack_vehicle_control_raw(frame.payload)
        except WireDecodeError:
            self.malformed_drops += 1
            return
        if not (math.isfinite(steering) and math.isfinite(throttle) and math.isfinite(stamp)):
            self.malformed_drops += 1
            return
        if abs(steering) > 1.0 or abs(throttle) > 1.0:
            self.clamp_events += 1
        self.handle_vehicle_control(
            VehicleControl(steering=steering, throttle=throttle, stamp=stamp, seq=seq),
            now,
        )

    def handle_vehicle_control(self, msg: VehicleControl, now: float) -> bool:
        """Apply a (already clamped) command; returns False for stale drops.

        A message whose seq is not greater than the last accepted one is
        ignored and counted; it neither changes the outputs nor feeds the
        watchdog.
        """
        if self._last_cmd_seq is not None and msg.seq <= self._last_cmd_seq:
            self.stale_drops += 1
            return False
        self._last_cmd_seq = msg.seq
        self.last_control = msg
        self.watchdog_deadline = now + self.watchdog_timeout_s
        return True

    # -- per-tick ---------------------------------------------------------

    def mcu_tick(self, steer_edges, drive_edges, now: float) -> McuTickResult:
        """Advance one 1 kHz tick.

        steer_edges / drive_edges are this tick's phase-state batches (any
        sequence of two-bit codes; None or empty means the shaft did not
        cross a quarter-step boundary). Returns the PWM pair and any frames
        that came due.
        """
        # The I2C register holds the slave count captured at the end of the
        # tick i2c_latency_ticks ago; read it before decoding this tick's
        # edges. Zero latency means the master reads the live count.
        lagged = self.i2c_latency_ticks > 0
        drive_view = self._i2c_history[0] if lagged else 0

        if steer_edges is not None and len(steer_edges) > 0:
            self.steer_decoder.feed(steer_edges)
        if drive_edges is not None and len(drive_edges) > 0:
            self.drive_decoder.feed(drive_edges)

        if lagged:
            self._i2c_history.append(self.drive_decoder.count)
            self._i2c_history.popleft()
        else:
            drive_view = self.drive_decoder.count
        self._last_drive_view = drive_view

        # Inclusive comparison: a tick landing exactly on the deadline is
        # already past the allowance, so the full timeout without a command
        # guarantees zeroed outputs even when tick and deadline coincide.
        if now >= self.watchdog_deadline:
            steer_duty = 0.0
            drive_duty = 0.0
        else:
            steer_duty = self.last_control.steering
            drive_duty = self.last_control.throttle

        self._tick_count += 1
        frames: list[Frame] = []
        if self._tick_count % self._publish_every == 0:
            pulse = EncoderPulse(
                drive_count=drive_view,
                steer_count=self.steer_decoder.count,
                stamp=now,
                seq=self._pulse_seq,
            )
            self._pulse_seq += 1
            frames.append(self._registry.encode_message("/encoder_pulse", pulse))
        if self._tick_count % self._heartbeat_every == 0:
            frames.append(
                self._registry.encode_message("/heartbeat", self.heartbeat(now))
            )
            self._heartbeat_seq += 1

        return McuTickResult(
            steer=PwmCommand(PwmChannel.STEER, steer_duty),
            drive=PwmCommand(PwmChannel.DRIVE, drive_duty),
            frames=tuple(frames),
        )

    # -- introspection ----------------------------------------------------

    @property
    def drive_count_master_view(self) -> int:
        """The drive count the master read over I2C during the latest tick."""
        return self._last_drive_view

    def heartbeat(self, now: float) -> Heartbeat:
        """Snapshot of the unit's health counters (does not advance state)."""
        return Heartbeat(
            frames_ok=self._rx.frames_ok,
            frames_bad_checksum=self._rx.frames_bad_checksum,
            bytes_skipped=self._rx.bytes_skipped,
            invalid_transitions=(
                self.steer_decoder.invalid_transitions
                + self.drive_decoder.invalid_transitions
            ),
            clamp_events=self.clamp_events,
            stale_drops=self.stale_drops,
            malformed_drops=self.malformed_drops,
            stamp=now,
            seq=self._heartbeat_seq,
        )
