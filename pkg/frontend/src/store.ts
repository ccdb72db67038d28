// Latest-value telemetry cache plus the handful of derived quantities the
// panels display. Rendering reads from here on its own clock; message
// arrival only updates state.

import {
  asEncoderPulse,
  asHeartbeat,
  asImuSample,
  asLaserScan,
  EncoderPulse,
  Heartbeat,
  ImuSample,
  LaserScan,
  Push,
} from "./protocol.js";
import { DRIVE_METERS_PER_COUNT, STEER_RADIANS_PER_COUNT } from "./constants.js";

/** How much encoder history feeds the speed estimate. A quarter second
 * of 50 Hz pulses smooths quantization without going mushy on transients. */
const SPEED_WINDOW_S = 0.25;

export interface Pose {
  x: number;
  y: number;
  yaw: number;
}

export type TopicKind = "encoder" | "imu" | "scan" | "heartbeat";

export class TelemetryStore {
  encoder: EncoderPulse | null = null;
  imu: ImuSample | null = null;
  scan: LaserScan | null = null;
  heartbeat: Heartbeat | null = null;

  /** Ground speed in m/s, derived by differencing drive counts. */
  speedMps = 0;
  /** Dead-reckoned planar pose; resettable, drifts like dead reckoning does. */
  pose: Pose = { x: 0, y: 0, yaw: 0 };

  malformed = 0;

  private pulseWindow: EncoderPulse[] = [];
  private warn: (msg: string) => void;

  constructor(warn: (msg: string) => void = (m) => console.warn(m)) {
    this.warn = warn;
  }

  /** Steering column angle in radians, positive left. */
  get steeringRad(): number {
    return this.encoder ? this.encoder.steer_count * STEER_RADIANS_PER_COUNT : 0;
  }

  /**
   * Vehicle heading in radians, counterclockwise positive. The IMU
   * publishes in its sensor-native frame (z down), where yaw runs
   * clockwise, so frame 0 gets its sign flipped.
   */
  get headingRad(): number {
    if (!this.imu) return 0;
    const q = this.imu.orientation;
    const raw = Math.atan2(2 * (q.w * q.z + q.x * q.y), 1 - 2 * (q.y * q.y + q.z * q.z));
    return this.imu.frame === 0 ? -raw : raw;
  }

  resetPose(): void {
    this.pose = { x: 0, y: 0, yaw: 0 };
  }

  /** Ingest one push; returns which panel it touched, or null if dropped. */
  onPush(push: Push): TopicKind | null {
    switch (push.topic) {
      case "/encoder_pulse": {
        const m = asEncoderPulse(push.msg);
        if (!m) return this.dropped(push.topic);
        this.ingestPulse(m);
        return "encoder";
      }
      case "/imu": {
        const m = asImuSample(push.msg);
        if (!m) return this.dropped(push.topic);
        this.imu = m;
        return "imu";
      }
      case "/scan": {
        const m = asLaserScan(push.msg);
        if (!m) return this.dropped(push.topic);
        this.scan = m;
        return "scan";
      }
      case "/heartbeat": {
        const m = asHeartbeat(push.msg);
        if (!m) return this.dropped(push.topic);
        this.heartbeat = m;
        return "heartbeat";
      }
      default:
        return null;
    }
  }

  private dropped(topic: string): null {
    this.malformed += 1;
    this.warn(`malformed message on ${topic}, skipped`);
    return null;
  }

  private ingestPulse(m: EncoderPulse): void {
    const prev = this.encoder;
    this.encoder = m;

    // Dead-reckon with the distance this pulse added, steered by the
    // current IMU heading (falls back to the integrated yaw when the IMU
    // is quiet).
    if (prev && m.stamp > prev.stamp) {
      const ds = (m.drive_count - prev.drive_count) * DRIVE_METERS_PER_COUNT;
      const yaw = this.imu ? this.headingRad : this.pose.yaw;
      this.pose = {
        x: this.pose.x + ds * Math.cos(yaw),
        y: this.pose.y + ds * Math.sin(yaw),
        yaw,
      };
    }

    // Speed over a short trailing window. Out-of-order or repeated stamps
    // (e.g. a replayed session) reset the window instead of poisoning it.
    const w = this.pulseWindow;
    if (w.length > 0 && m.stamp <= w[w.length - 1]!.stamp) {
      this.pulseWindow = [m];
      this.speedMps = 0;
      return;
    }
    w.push(m);
    while (w.length > 2 && m.stamp - w[0]!.stamp > SPEED_WINDOW_S) {
      w.shift();
    }
    const first = w[0]!;
    const dt = m.stamp - first.stamp;
    if (dt > 0) {
      this.speedMps = ((m.drive_count - first.drive_count) * DRIVE_METERS_PER_COUNT) / dt;
    }
  }
}
