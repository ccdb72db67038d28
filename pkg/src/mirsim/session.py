"""Bringup: wire every subsystem together and run it on one clock.

The standard node graph this builds:

    joy --> /joy --> joy2vehicle --> /vehicle_control --> serial_node
    serial_node --> /encoder_pulse, /heartbeat
    lidar_node --> /scan      imu_node --> /imu
    camera_node --> /camera_stub
    data_acquisition subscribes to whatever recording is configured for

serial_node is the host end of the emulated serial link. Each 1 kHz
control tick moves the whole closed loop one millisecond:

    1. receive and decode bytes the microcontrollers sent last tick,
       publishing /encoder_pulse and /heartbeat
    2. drain /vehicle_control and queue the encoded frames toward the MCU
    3. advance both byte pipes one tick of transport latency
    4. deliver the arrived bytes into the control unit
    5. step the plant under the PWM duties currently held
    6. tick the control unit with the encoder edges the step produced,
       and hold the PWM commands it returns for the next step
    7. queue the frames it emitted back toward the host

Sensors, teleoperation, input scripts and the recorder are separate
scheduler tasks; their priorities put them before (inputs, sensors)
or after (recording, bridge) the control slot at any shared instant,
so a run's event order is fully determined by its configuration.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from .bus import Bus, NodeHandle, Subscription, TopicSpec
from .config import BringupConfig, default_config
from .daq import Recorder, RecordingConfig
from .firmware import TICK_RATE_HZ, ControlUnit
from .msgs import (
    CameraFrameStub,
    EncoderPulse,
    Heartbeat,
    ImuSample,
    JoyState,
    LaserScan,
    VehicleControl,
)
from .plant import LIDAR_PRESETS, Plant, VehicleState, WorldModel, sample_imu
from .sim import (
    PRIORITY_CONTROL,
    PRIORITY_DAQ,
    PRIORITY_INPUT,
    PRIORITY_SENSORS,
    PRIORITY_TELEOP,
    Scheduler,
)
from .teleop import ScriptedJoySource, TeleopNode
from .wire import DEFAULT_TOPICS, BytePipe, StreamDecoder, encode_frame

log = logging.getLogger(__name__)

CONTROL_DT = 1.0 / TICK_RATE_HZ

#: Recorded when --record is passed without a daq section in the config.
DEFAULT_RECORD_TOPICS = (
    "/joy",
    "/vehicle_control",
    "/encoder_pulse",
    "/imu",
    "/scan",
    "/heartbeat",
    "/camera_stub",
)


class SerialLink:
    """Host end of the serial link plus the loop that closes it.

    Owns both byte pipes, the host-side frame decoder, and the plant/
    firmware stepping order described in the module docstring.
    """

    def __init__(
        self,
        bus: Bus,
        unit: ControlUnit,
        plant: Plant,
        *,
        node_name: str = "serial_node",
        registry=DEFAULT_TOPICS,
    ) -> None:
        self.unit = unit
        self.plant = plant
        self.registry = registry
        self.host_to_mcu = BytePipe(latency_ticks=1)
        self.mcu_to_host = BytePipe(latency_ticks=1)
        self.decoder = StreamDecoder()
        self._node: NodeHandle = bus.node(node_name)
        self._commands: Subscription = self._node.subscribe("/vehicle_control")
        self._pub_pulse = self._node.advertise(
            TopicSpec("/encoder_pulse", EncoderPulse)
        )
        self._pub_heartbeat = self._node.advertise(
            TopicSpec("/heartbeat", Heartbeat)
        )
        self._steer_duty = 0.0
        self._drive_duty = 0.0

    def control_tick(self, now: float) -> None:
        # Host receive: what the MCU sent last tick.
        for frame in self.decoder.feed(self.mcu_to_host.recv()):
            try:
                msg = self.registry.decode_frame(frame)
            except Exception as exc:
                log.warning("host dropped undecodable frame: %s", exc)
                continue
            if isinstance(msg, EncoderPulse):
                self._pub_pulse.publish(msg)
            elif isinstance(msg, Heartbeat):
                self._pub_heartbeat.publish(msg)
            else:
                log.warning("host ignoring unexpected %s", type(msg).__name__)

        # Host transmit: forward pending commands.
        for envelope in self._commands.drain():
            frame = self.registry.encode_message("/vehicle_control", envelope.msg)
            self.host_to_mcu.send(encode_frame(frame))

        # One tick of transport latency in both directions.
        self.host_to_mcu.tick()
        self.mcu_to_host.tick()

        # MCU receive, plant step under held duties, firmware tick.
        self.unit.receive_serial(self.host_to_mcu.recv(), now)
        edges = self.plant.step(self._steer_duty, self._drive_duty, CONTROL_DT)
        result = self.unit.mcu_tick(edges.steer_edges, edges.drive_edges, now)
        self._steer_duty = result.steer.duty
        self._drive_duty = result.drive.duty
        for frame in result.frames:
            self.mcu_to_host.send(encode_frame(frame))

    @property
    def held_duties(self) -> tuple[float, float]:
        return self._steer_duty, self._drive_duty

    def shutdown(self) -> None:
        self._node.shutdown()


class SimSession:
    """One configured, runnable simulation.

    Construction wires everything; run_for()/run_until() advance it;
    shutdown() tears the graph back down to empty. The constituent
    pieces stay reachable as attributes so tests and the bridge can
    watch or poke the running system.
    """

    def __init__(
        self,
        cfg: BringupConfig | None = None,
        *,
        headless: bool = True,
        record: bool = False,
    ) -> None:
        self.cfg = cfg if cfg is not None else default_config()
        cfg = self.cfg

        self.bus = Bus()
        self.sched = Scheduler(realtime=cfg.realtime)
        world = (
            WorldModel.from_file(cfg.world_file)
            if cfg.world_file is not None
            else WorldModel()
        )
        self.plant = Plant(
            config=cfg.plant,
            world=world,
            lidar=LIDAR_PRESETS[cfg.lidar],
            initial_state=VehicleState(),
        )
        self.unit = ControlUnit()
        self.link = SerialLink(self.bus, self.unit, self.plant)
        self.teleop = TeleopNode(self.bus, cfg.teleop)

        # Input side of the graph. The joy node publishes scripted events
        # and anything the bridge injects; with neither it still anchors
        # the topology.
        self._joy_node = self.bus.node("joy")
        self._joy_pub = self._joy_node.advertise(TopicSpec("/joy", JoyState))
        self._joy_current: JoyState | None = None
        if cfg.joy_script is not None:
            script = ScriptedJoySource.from_file(cfg.joy_script)
            for t, sample in script:
                self.sched.call_at(
                    t,
                    lambda now, sample=sample: self._set_joy(sample, now),
                    name="joy-script",
                    priority=PRIORITY_INPUT,
                )
            if script.events:
                # Script events mark stick *changes*, the way a physical
                # device reports; between events the position is held and
                # re-asserted at the teleop cadence, until the script's
                # final event releases the stick.
                last_t = script.events[-1][0]
                self.sched.every(
                    cfg.teleop.publish_period_s,
                    lambda now: self._reassert_joy(now, last_t),
                    name="joy-hold",
                    priority=PRIORITY_INPUT,
                )
            log.info("scheduled %d scripted joystick events", len(script))

        # Sensor nodes.
        self._lidar_node = self.bus.node("lidar_node")
        self._scan_pub = self._lidar_node.advertise(TopicSpec("/scan", LaserScan))
        self._imu_node = self.bus.node("imu_node")
        self._imu_pub = self._imu_node.advertise(TopicSpec("/imu", ImuSample))
        self._camera_node = self.bus.node("camera_node")
        self._camera_pub = self._camera_node.advertise(
            TopicSpec("/camera_stub", CameraFrameStub)
        )
        self._imu_prev = self.plant.state
        self._frame_index = 0

        # Periodic work, slotted by priority at shared instants. Handles
        # are kept so a task can be cancelled (fault injection in tests,
        # e.g. killing teleop to watch the firmware watchdog catch it).
        self.tasks = {}
        self.tasks["control"] = self.sched.every(
            CONTROL_DT, self.link.control_tick,
            name="control", priority=PRIORITY_CONTROL,
        )
        self.tasks["teleop"] = self.sched.every(
            cfg.teleop.publish_period_s, self.teleop.on_tick,
            name="teleop", priority=PRIORITY_TELEOP,
        )
        lidar_cfg = LIDAR_PRESETS[cfg.lidar]
        self.tasks["lidar"] = self.sched.every(
            1.0 / lidar_cfg.rate_hz, self._emit_scan,
            name="lidar", priority=PRIORITY_SENSORS,
        )
        self._imu_dt = 1.0 / cfg.imu_rate_hz
        self.tasks["imu"] = self.sched.every(
            self._imu_dt, self._emit_imu,
            name="imu", priority=PRIORITY_SENSORS,
        )
        self.tasks["camera"] = self.sched.every(
            1.0 / cfg.camera_rate_hz, self._emit_camera,
            name="camera", priority=PRIORITY_SENSORS,
        )

        # Optional recording.
        self.recorder: Recorder | None = None
        recording_cfg = cfg.daq
        if recording_cfg is None and record:
            recording_cfg = RecordingConfig(
                topics=DEFAULT_RECORD_TOPICS, output_dir="mir_sessions"
            )
        if recording_cfg is not None:
            self.recorder = Recorder(self.bus, recording_cfg)
            self.sched.every(
                0.02, self.recorder.on_tick,
                name="daq-drain", priority=PRIORITY_DAQ,
            )
            self.sched.every(
                recording_cfg.flush_interval_s, self.recorder.flush,
                name="daq-flush", priority=PRIORITY_DAQ,
            )

        # Optional dashboard bridge (separate thread, realtime use only).
        self.bridge = None
        if not headless:
            from .bridge import BridgeServer

            self.bridge = BridgeServer(
                self.bus, self._joy_pub,
                port=cfg.bridge_port, static_dir=cfg.static_dir,
            )
            self.bridge.start()

        self._down = False

    # -- scripted input ------------------------------------------------------

    def _set_joy(self, sample: JoyState, now: float) -> None:
        self._joy_current = sample
        self._joy_pub.publish(replace(sample, stamp=now))

    def _reassert_joy(self, now: float, last_t: float) -> None:
        if self._joy_current is not None and now <= last_t:
            self._joy_pub.publish(replace(self._joy_current, stamp=now))

    # -- sensor emissions ----------------------------------------------------

    def _emit_scan(self, now: float) -> None:
        self._scan_pub.publish(self.plant.scan(stamp=now))

    def _emit_imu(self, now: float) -> None:
        state = self.plant.state
        sample = replace(sample_imu(self._imu_prev, state, self._imu_dt), stamp=now)
        self._imu_prev = state
        self._imu_pub.publish(sample)

    def _emit_camera(self, now: float) -> None:
        self._camera_pub.publish(
            CameraFrameStub(frame_index=self._frame_index, stamp=now)
        )
        self._frame_index += 1

    # -- running ---------------------------------------------------------------

    @property
    def now(self) -> float:
        return self.sched.now

    def run_for(self, duration: float) -> None:
        self.sched.run_for(duration)

    def run_until(self, t: float) -> None:
        self.sched.run_until(t)

    def stop(self) -> None:
        self.sched.stop()

    def graph(self):
        return self.bus.graph()

    @property
    def session_dir(self) -> str | None:
        return self.recorder.session_dir if self.recorder else None

    def shutdown(self) -> None:
        """Stop the bridge, flush recording, withdraw every node."""
        if self._down:
            return
        self._down = True
        if self.bridge is not None:
            self.bridge.stop()
        if self.recorder is not None:
            self.recorder.stop()
        self.teleop.shutdown()
        self.link.shutdown()
        for node in (
            self._joy_node,
            self._lidar_node,
            self._imu_node,
            self._camera_node,
        ):
            node.shutdown()

    def __enter__(self) -> "SimSession":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


__all__ = [
    "CONTROL_DT",
    "DEFAULT_RECORD_TOPICS",
    "SerialLink",
    "SimSession",
]
