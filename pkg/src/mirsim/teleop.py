"""Joystick-to-command translation and the joy2vehicle node.

The mapping applies a deadzone with re-normalization, so the usable part
of the stick travel is stretched back out to the full command range:

    out = sign(a) * (|a| - deadzone) / (1 - deadzone) * scale

for |a| > deadzone, else 0. This keeps full deflection producing the full
scaled command instead of (1 - deadzone) of it, and it is continuous and
monotone across the whole travel.

The node side holds the most recent JoyState and republishes it as a
VehicleControl at a fixed rate (zero-order hold). If no input arrives for
more than SILENCE_TIMEOUT_S the node drops to neutral so a dead input
device cannot leave the vehicle driving.

Input sources live here too: a scripted JSONL event file for reproducible
runs, a keyboard fallback, and a parser for the Linux joystick device
protocol (8-byte events, little-endian u32 ms / s16 value / u8 type /
u8 number).
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass

from .bus import Bus, NodeHandle, Publisher, Subscription, TopicSpec
from .msgs import JoyState, VehicleControl

log = logging.getLogger(__name__)

SILENCE_TIMEOUT_S = 1.0

JOY_TOPIC = "/joy"
VEHICLE_CONTROL_TOPIC = "/vehicle_control"


@dataclass(frozen=True)
class TeleopConfig:
    """Axis assignment and shaping parameters for joy_to_vehicle."""

    steering_axis: int = 0
    throttle_axis: int = 1
    deadzone: float = 0.05
    steering_scale: float = 1.0
    throttle_scale: float = 1.0
    invert_steering: bool = False
    publish_rate_hz: float = 20.0

    def __post_init__(self) -> None:
        if self.steering_axis < 0 or self.throttle_axis < 0:
            raise ValueError("axis indices must be non-negative")
        if not 0.0 <= self.deadzone < 0.5:
            raise ValueError(
                f"deadzone must be in [0, 0.5), got {self.deadzone}"
            )
        for name in ("steering_scale", "throttle_scale"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not self.publish_rate_hz > 0.0:
            raise ValueError("publish_rate_hz must be positive")

    @property
    def publish_period_s(self) -> float:
        return 1.0 / self.publish_rate_hz


def shape_axis(value: float, deadzone: float, scale: float) -> float:
    """Deadzone-and-rescale curve for one axis, clamped to [-1, 1]."""
    magnitude = abs(value)
    if magnitude <= deadzone:
        return 0.0
    out = (magnitude - deadzone) / (1.0 - deadzone) * scale
    return math.copysign(min(out, 1.0), value)


def joy_to_vehicle(
    joy: JoyState,
    cfg: TeleopConfig,
    *,
    stamp: float | None = None,
    seq: int = 0,
) -> VehicleControl:
    """Map one joystick sample to a drive-by-wire command.

    Raises ValueError if the sample does not cover a configured axis
    index. stamp defaults to the joystick sample's own stamp.
    """
    for idx in (cfg.steering_axis, cfg.throttle_axis):
        if idx >= len(joy.axes):
            raise ValueError(
                f"joystick sample has {len(joy.axes)} axes,"
                f" configured axis {idx} is missing"
            )
    steering = shape_axis(
        joy.axes[cfg.steering_axis], cfg.deadzone, cfg.steering_scale
    )
    if cfg.invert_steering:
        steering = -steering
    throttle = shape_axis(
        joy.axes[cfg.throttle_axis], cfg.deadzone, cfg.throttle_scale
    )
    return VehicleControl(
        steering=steering,
        throttle=throttle,
        stamp=joy.stamp if stamp is None else stamp,
        seq=seq,
    )


class TeleopNode:
    """The joy2vehicle node: /joy in, /vehicle_control out.

    on_tick() is meant to be driven at cfg.publish_rate_hz by the
    simulation scheduler. Each call drains pending joystick samples,
    keeps the newest, and publishes one command: the held sample mapped
    through joy_to_vehicle, or neutral once the input has been silent
    for more than silence_timeout_s (and from startup until the first
    sample arrives).
    """

    def __init__(
        self,
        bus: Bus,
        cfg: TeleopConfig | None = None,
        *,
        node_name: str = "joy2vehicle",
        silence_timeout_s: float = SILENCE_TIMEOUT_S,
    ) -> None:
        self.cfg = cfg if cfg is not None else TeleopConfig()
        self.silence_timeout_s = silence_timeout_s
        self._node: NodeHandle = bus.node(node_name)
        self._sub: Subscription = self._node.subscribe(JOY_TOPIC)
        self._pub: Publisher = self._node.advertise(
            TopicSpec(VEHICLE_CONTROL_TOPIC, VehicleControl)
        )
        self._latest: JoyState | None = None
        self._last_seen: float | None = None
        self._silent = True
        self._next_seq = 0

    def on_tick(self, now: float) -> VehicleControl:
        """Publish and return the command for this publish period."""
        for envelope in self._sub.drain():
            self._latest = envelope.msg
            self._last_seen = now
            self._silent = False

        silent = (
            self._last_seen is None
            or now - self._last_seen > self.silence_timeout_s
        )
        if silent and not self._silent:
            self._silent = True
            log.warning(
                "teleop input silent for %.2f s, commanding neutral",
                now - self._last_seen,
            )

        if silent:
            cmd = VehicleControl(0.0, 0.0, stamp=now, seq=self._next_seq)
        else:
            assert self._latest is not None
            cmd = joy_to_vehicle(
                self._latest, self.cfg, stamp=now, seq=self._next_seq
            )
        self._next_seq += 1
        self._pub.publish(cmd)
        return cmd

    def shutdown(self) -> None:
        self._node.shutdown()


# --------------------------------------------------------------------------
# Scripted input


class ScriptedJoySource:
    """Joystick events from a JSONL file, for reproducible runs.

    One event per line: {"t": <seconds>, "axes": [...], "buttons": [...]}
    with buttons optional. Timestamps must be finite, non-negative and
    non-decreasing. Blank lines are permitted; anything else that fails
    to parse is an error naming the line.
    """

    def __init__(self, events: tuple[tuple[float, JoyState], ...]) -> None:
        self.events = events

    @classmethod
    def from_text(cls, text: str, *, source: str = "<string>") -> ScriptedJoySource:
        events: list[tuple[float, JoyState]] = []
        last_t = -math.inf
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            where = f"{source}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{where}: expected an object per line")
            try:
                t = float(obj["t"])
                axes = tuple(float(a) for a in obj["axes"])
                buttons = tuple(int(b) for b in obj.get("buttons", ()))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{where}: bad event: {exc}") from exc
            if not math.isfinite(t) or t < 0.0:
                raise ValueError(f"{where}: event time must be finite and >= 0")
            if t < last_t:
                raise ValueError(
                    f"{where}: event times must be non-decreasing"
                    f" ({t} after {last_t})"
                )
            if any(not math.isfinite(a) for a in axes):
                raise ValueError(f"{where}: axes must be finite")
            last_t = t
            events.append((t, JoyState(axes=axes, buttons=buttons, stamp=t)))
        return cls(tuple(events))

    @classmethod
    def from_file(cls, path: str) -> ScriptedJoySource:
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), source=path)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


# --------------------------------------------------------------------------
# Keyboard input

_ARROW_SEQUENCES = {
    b"\x1b[A": "up",
    b"\x1b[B": "down",
    b"\x1b[C": "right",
    b"\x1b[D": "left",
}
_PLAIN_KEYS = {
    b" ": "stop",
    b"x": "stop",
    b"q": "quit",
}


def decode_key_bytes(data: bytes) -> list[str]:
    """Extract key names from raw terminal input bytes.

    Recognizes the arrow-key escape sequences plus space/x (stop) and q
    (quit); everything else is discarded.
    """
    keys: list[str] = []
    i = 0
    while i < len(data):
        if data[i : i + 1] == b"\x1b":
            name = _ARROW_SEQUENCES.get(data[i : i + 3])
            if name is not None:
                keys.append(name)
                i += 3
                continue
            i += 1
            continue
        name = _PLAIN_KEYS.get(data[i : i + 1].lower())
        if name is not None:
            keys.append(name)
        i += 1
    return keys


class KeyboardTeleop:
    """Arrow-key fallback when no gamepad is present.

    Each keypress latches full deflection on its axis (up/down on
    throttle, left/right on steering); stop recenters both. The latched
    state persists until the next key, matching the zero-order hold the
    publisher applies anyway.
    """

    def __init__(self) -> None:
        self._axes = [0.0, 0.0]

    def press(self, key: str, *, stamp: float = 0.0) -> JoyState | None:
        """Apply one named key; returns the new sample, or None if the
        key is not a driving key."""
        if key == "up":
            self._axes[1] = 1.0
        elif key == "down":
            self._axes[1] = -1.0
        elif key == "left":
            self._axes[0] = 1.0
        elif key == "right":
            self._axes[0] = -1.0
        elif key == "stop":
            self._axes = [0.0, 0.0]
        else:
            return None
        return JoyState(axes=tuple(self._axes), stamp=stamp)


# --------------------------------------------------------------------------
# Linux joystick device protocol

JS_EVENT_BUTTON = 0x01
JS_EVENT_AXIS = 0x02
JS_EVENT_INIT = 0x80

JS_EVENT_SIZE = 8
_JS_EVENT = struct.Struct("<IhBB")

# Positive s16 range; the kernel reports values in [-32768, 32767] and we
# clamp the one asymmetric extreme.
_JS_AXIS_FULL_SCALE = 32767.0


@dataclass(frozen=True)
class JsEvent:
    """One decoded event from the kernel joystick interface."""

    time_ms: int
    value: int
    type: int
    number: int

    @property
    def is_axis(self) -> bool:
        return bool(self.type & JS_EVENT_AXIS)

    @property
    def is_button(self) -> bool:
        return bool(self.type & JS_EVENT_BUTTON)

    @property
    def is_init(self) -> bool:
        return bool(self.type & JS_EVENT_INIT)


def parse_js_event(data: bytes) -> JsEvent:
    if len(data) != JS_EVENT_SIZE:
        raise ValueError(
            f"joystick event must be {JS_EVENT_SIZE} bytes, got {len(data)}"
        )
    time_ms, value, type_, number = _JS_EVENT.unpack(data)
    return JsEvent(time_ms=time_ms, value=value, type=type_, number=number)


def normalize_axis(value: int) -> float:
    return max(-1.0, min(1.0, value / _JS_AXIS_FULL_SCALE))


class GamepadState:
    """Accumulates joystick events into a publishable JoyState.

    Axis and button lists grow on demand, so devices with any number of
    controls work without declaring a layout up front. Init events (the
    state dump the kernel sends on open) are applied like live ones.
    """

    def __init__(self, *, min_axes: int = 2) -> None:
        self._axes = [0.0] * min_axes
        self._buttons: list[int] = []

    def apply(self, event: JsEvent) -> None:
        if event.is_axis:
            while len(self._axes) <= event.number:
                self._axes.append(0.0)
            self._axes[event.number] = normalize_axis(event.value)
        elif event.is_button:
            while len(self._buttons) <= event.number:
                self._buttons.append(0)
            self._buttons[event.number] = 1 if event.value else 0

    def snapshot(self, *, stamp: float = 0.0) -> JoyState:
        return JoyState(
            axes=tuple(self._axes),
            buttons=tuple(self._buttons),
            stamp=stamp,
        )


def read_js_events(fileobj):
    """Yield JsEvent objects from a binary stream until EOF."""
    while True:
        chunk = fileobj.read(JS_EVENT_SIZE)
        if not chunk or len(chunk) < JS_EVENT_SIZE:
            return
        yield parse_js_event(chunk)


__all__ = [
    "SILENCE_TIMEOUT_S",
    "TeleopConfig",
    "shape_axis",
    "joy_to_vehicle",
    "TeleopNode",
    "ScriptedJoySource",
    "decode_key_bytes",
    "KeyboardTeleop",
    "JsEvent",
    "parse_js_event",
    "normalize_axis",
    "GamepadState",
    "read_js_events",
    "JS_EVENT_AXIS",
    "JS_EVENT_BUTTON",
    "JS_EVENT_INIT",
    "JS_EVENT_SIZE",
]
