"""YAML bringup configuration.

An empty file is a complete configuration: every field has a default.
Unknown keys are rejected by name rather than ignored, because a typo'd
override that silently falls back to the default is the worst failure
mode a config file can have. Section contents map straight onto the
dataclasses they configure (plant -> PlantConfig and so on), so those
classes' own validation applies unchanged.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import yaml

from .daq import RecordingConfig
from .errors import ConfigError
from .plant import LIDAR_PRESETS, PlantConfig
from .teleop import TeleopConfig

DEFAULT_BRIDGE_PORT = 9090
DEFAULT_IMU_RATE_HZ = 50.0
DEFAULT_CAMERA_RATE_HZ = 10.0


@dataclass(frozen=True)
class BringupConfig:
    """Everything a session needs, resolved and validated."""

    plant: PlantConfig
    teleop: TeleopConfig
    daq: RecordingConfig | None = None
    world_file: str | None = None
    lidar: str = "neato"
    bridge_port: int = DEFAULT_BRIDGE_PORT
    static_dir: str | None = None
    realtime: bool = False
    seed: int = 0
    joy_script: str | None = None
    imu_rate_hz: float = DEFAULT_IMU_RATE_HZ
    camera_rate_hz: float = DEFAULT_CAMERA_RATE_HZ

    def __post_init__(self) -> None:
        if not 1 <= self.bridge_port <= 65535:
            raise ConfigError(
                f"bridge_port must be in [1, 65535], got {self.bridge_port}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.lidar not in LIDAR_PRESETS:
            known = ", ".join(sorted(LIDAR_PRESETS))
            raise ConfigError(
                f"unknown lidar preset {self.lidar!r} (known: {known})"
            )
        for name in ("imu_rate_hz", "camera_rate_hz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.world_file is not None and not os.path.isfile(self.world_file):
            raise ConfigError(f"world file not found: {self.world_file}")
        if self.static_dir is not None and not os.path.isdir(self.static_dir):
            raise ConfigError(f"static dir not found: {self.static_dir}")
        if self.joy_script is not None and not os.path.isfile(self.joy_script):
            raise ConfigError(f"joy script not found: {self.joy_script}")


def default_config() -> BringupConfig:
    return BringupConfig(plant=PlantConfig(), teleop=TeleopConfig())


def _require_mapping(obj, where: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(obj).__name__}")
    return obj


def _build_section(cls, raw, where: str):
    """Instantiate a config dataclass from a YAML mapping, catching typos."""
    data = _require_mapping(raw, where)
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {where}.{key!r}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where} section: {exc}") from exc


_TOP_LEVEL_KEYS = {
    "plant",
    "teleop",
    "daq",
    "world_file",
    "lidar",
    "bridge_port",
    "static_dir",
    "realtime",
    "seed",
    "joy_script",
    "imu_rate_hz",
    "camera_rate_hz",
}


def parse_config(text: str, *, source: str = "<string>") -> BringupConfig:
    """Parse YAML text into a BringupConfig.

    Raises ConfigError with the source location for malformed YAML and
    with the offending name for unknown or invalid keys.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(
                f"{source}:{mark.line + 1}: {getattr(exc, 'problem', exc)}"
            ) from exc
        raise ConfigError(f"{source}: {exc}") from exc

    data = _require_mapping(raw, "config")
    for key in data:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown key {key!r} in {source}")

    plant = _build_section(PlantConfig, data.get("plant"), "plant")
    teleop = _build_section(TeleopConfig, data.get("teleop"), "teleop")
    daq = None
    if data.get("daq") is not None:
        daq = _build_section(RecordingConfig, data.get("daq"), "daq")

    scalars = {}
    for key in (
        "world_file",
        "lidar",
        "bridge_port",
        "static_dir",
        "realtime",
        "seed",
        "joy_script",
        "imu_rate_hz",
        "camera_rate_hz",
    ):
        if key in data and data[key] is not None:
            scalars[key] = data[key]

    try:
        return BringupConfig(plant=plant, teleop=teleop, daq=daq, **scalars)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str) -> BringupConfig:
    """Read and parse a YAML config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=path)


__all__ = [
    "DEFAULT_BRIDGE_PORT",
    "DEFAULT_IMU_RATE_HZ",
    "DEFAULT_CAMERA_RATE_HZ",
    "BringupConfig",
    "default_config",
    "parse_config",
    "load_config",
]
