"""Software twin of a ride-on-car research platform.

The package simulates the whole drive-by-wire stack of a small electric
vehicle: the dual-microcontroller control unit with its quadrature
decoders and watchdog, the byte-exact serial link to the host, the
vehicle plant with encoder, LIDAR and IMU emulation, and the host-side
node graph (teleoperation, recording, replay, a WebSocket bridge for
dashboards). Runs are deterministic: the same configuration and inputs
produce the same logs, byte for byte.

Most users want one of:

    from mirsim import SimSession, default_config
    sess = SimSession(default_config())
    sess.run_for(10.0)

or the CLI: ``mirsim bringup --duration 10``.
"""

from .bus import Bus, Envelope, GraphView, TopicSpec
from .config import BringupConfig, default_config, load_config
from .daq import Recorder, RecordingConfig, load_session, replay
from .errors import (
    ConfigError,
    InvalidStateError,
    MirError,
    SchemaConflictError,
    WireDecodeError,
)
from .firmware import ControlUnit
from .msgs import (
    EncoderPulse,
    EulerAngles,
    Heartbeat,
    ImuSample,
    JoyState,
    LaserScan,
    Quaternion,
    VehicleControl,
    Vector3,
)
from .plant import LIDAR_PRESETS, Plant, PlantConfig, VehicleState, WorldModel
from .quadrature import PhasePair, QuadratureDecoder, quad_step
from .rotation import (
    euler_to_quaternion,
    imu_to_rep103,
    quaternion_to_euler,
    remap_razor_to_rep103,
)
from .session import SimSession
from .sim import Scheduler
from .wire import Frame, StreamDecoder, encode_frame

__version__ = "0.1.0"

__all__ = [
    "BringupConfig",
    "Bus",
    "ConfigError",
    "ControlUnit",
    "EncoderPulse",
    "Envelope",
    "EulerAngles",
    "Frame",
    "GraphView",
    "Heartbeat",
    "ImuSample",
    "InvalidStateError",
    "JoyState",
    "LIDAR_PRESETS",
    "LaserScan",
    "MirError",
    "PhasePair",
    "Plant",
    "PlantConfig",
    "QuadratureDecoder",
    "Quaternion",
    "Recorder",
    "RecordingConfig",
    "Scheduler",
    "SchemaConflictError",
    "SimSession",
    "StreamDecoder",
    "TopicSpec",
    "VehicleControl",
    "VehicleState",
    "Vector3",
    "WireDecodeError",
    "WorldModel",
    "default_config",
    "encode_frame",
    "euler_to_quaternion",
    "imu_to_rep103",
    "load_config",
    "load_session",
    "quad_step",
    "quaternion_to_euler",
    "remap_razor_to_rep103",
    "replay",
    "__version__",
]
