import { describe, expect, it } from "vitest";

import { DRIVE_METERS_PER_COUNT, STEER_RADIANS_PER_COUNT } from "../src/constants.js";
import { Push, SCAN_BEAMS } from "../src/protocol.js";
import { TelemetryStore } from "../src/store.js";

function pulse(stamp: number, drive: number, steer = 0, seq = 0): Push {
  return {
    topic: "/encoder_pulse",
    t: stamp,
    msg: { drive_count: drive, steer_count: steer, stamp, seq },
  };
}

function imuWithYaw(yawRad: number, frame: number, stamp = 0): Push {
  // Pure yaw rotation: q = (cos(yaw/2), 0, 0, sin(yaw/2)).
  const msg = {
    accel: { x: 0, y: 0, z: 9.81 },
    gyro: { x: 0, y: 0, z: 0 },
    mag: { x: 1, y: 0, z: 0 },
    orientation: { w: Math.cos(yawRad / 2), x: 0, y: 0, z: Math.sin(yawRad / 2) },
    frame,
    stamp,
  };
  return { topic: "/imu", t: stamp, msg };
}

function quietStore() {
  const warnings: string[] = [];
  const store = new TelemetryStore((m) => warnings.push(m));
  return { store, warnings };
}

describe("speed from encoder differencing", () => {
  it("recovers a constant speed from a steady 50 Hz count stream", () => {
    const { store } = quietStore();
    const speed = 1.12;
    const countsPerSample = (speed * 0.02) / DRIVE_METERS_PER_COUNT;
    for (let i = 0; i <= 30; i += 1) {
      store.onPush(pulse(i * 0.02, Math.round(i * countsPerSample), 0, i));
    }
    expect(store.speedMps).toBeCloseTo(speed, 2);
  });

  it("is zero before two samples arrive", () => {
    const { store } = quietStore();
    expect(store.speedMps).toBe(0);
    store.onPush(pulse(0, 100));
    expect(store.speedMps).toBe(0);
  });

  it("windows out stale history so a stop reads as zero", () => {
    const { store } = quietStore();
    for (let i = 0; i <= 20; i += 1) {
      store.onPush(pulse(i * 0.02, i * 50, 0, i));
    }
    expect(store.speedMps).toBeGreaterThan(0);
    // Vehicle parked: counts freeze while stamps advance.
    for (let i = 21; i <= 60; i += 1) {
      store.onPush(pulse(i * 0.02, 20 * 50, 0, i));
    }
    expect(store.speedMps).toBe(0);
  });

  it("a replay restart (stamp going backwards) resets rather than poisons", () => {
    const { store } = quietStore();
    store.onPush(pulse(1.0, 1000));
    store.onPush(pulse(1.02, 1100));
    expect(store.speedMps).toBeGreaterThan(0);
    store.onPush(pulse(0.02, 50));
    expect(store.speedMps).toBe(0);
    store.onPush(pulse(0.04, 100));
    expect(store.speedMps).toBeGreaterThan(0);
  });
});

describe("derived readouts", () => {
  it("converts steer counts to a column angle", () => {
    const { store } = quietStore();
    store.onPush(pulse(0, 0, 600));
    expect(store.steeringRad).toBeCloseTo(600 * STEER_RADIANS_PER_COUNT, 12);
  });

  it("flips yaw sign for the sensor-native frame and not for the other", () => {
    const { store } = quietStore();
    const theta = 0.7;
    // The simulated IMU reports -heading in its native z-down frame.
    store.onPush(imuWithYaw(-theta, 0));
    expect(store.headingRad).toBeCloseTo(theta, 12);
    store.onPush(imuWithYaw(theta, 1));
    expect(store.headingRad).toBeCloseTo(theta, 12);
  });
});

describe("pose dead reckoning", () => {
  it("integrates straight-ahead travel along x", () => {
    const { store } = quietStore();
    store.onPush(imuWithYaw(0, 0));
    store.onPush(pulse(0, 0));
    store.onPush(pulse(0.02, 1000));
    store.onPush(pulse(0.04, 2000));
    expect(store.pose.x).toBeCloseTo(2000 * DRIVE_METERS_PER_COUNT, 9);
    expect(store.pose.y).toBeCloseTo(0, 12);
  });

  it("travels along y when heading is 90 degrees", () => {
    const { store } = quietStore();
    store.onPush(imuWithYaw(-Math.PI / 2, 0)); // native frame: -heading
    store.onPush(pulse(0, 0));
    store.onPush(pulse(0.02, 1000));
    expect(store.pose.x).toBeCloseTo(0, 9);
    expect(store.pose.y).toBeCloseTo(1000 * DRIVE_METERS_PER_COUNT, 9);
    expect(store.pose.yaw).toBeCloseTo(Math.PI / 2, 12);
  });

  it("resetPose rezeroes without touching telemetry", () => {
    const { store } = quietStore();
    store.onPush(pulse(0, 0));
    store.onPush(pulse(0.02, 500));
    store.resetPose();
    expect(store.pose).toEqual({ x: 0, y: 0, yaw: 0 });
    expect(store.encoder?.drive_count).toBe(500);
  });
});

describe("malformed and unknown traffic", () => {
  it("drops a malformed message, warns, and keeps the last good value", () => {
    const { store, warnings } = quietStore();
    store.onPush(pulse(0, 42));
    const kind = store.onPush({ topic: "/encoder_pulse", t: 1, msg: { drive_count: "x" } });
    expect(kind).toBeNull();
    expect(store.malformed).toBe(1);
    expect(warnings).toHaveLength(1);
    expect(store.encoder?.drive_count).toBe(42);
  });

  it("ignores topics it does not display", () => {
    const { store, warnings } = quietStore();
    expect(store.onPush({ topic: "/camera_stub", t: 0, msg: { frame_index: 1 } })).toBeNull();
    expect(warnings).toHaveLength(0);
  });

  it("stores a complete scan", () => {
    const { store } = quietStore();
    const kind = store.onPush({
      topic: "/scan",
      t: 0.2,
      msg: {
        angle_min: 0,
        angle_increment: (2 * Math.PI) / SCAN_BEAMS,
        range_max: 5,
        ranges: new Array(SCAN_BEAMS).fill(2.5),
        valid: new Array(SCAN_BEAMS).fill(1),
        stamp: 0.2,
      },
    });
    expect(kind).toBe("scan");
    expect(store.scan?.ranges[0]).toBe(2.5);
  });

  it("stores a heartbeat", () => {
    const { store } = quietStore();
    const kind = store.onPush({
      topic: "/heartbeat",
      t: 1,
      msg: {
        frames_ok: 5,
        frames_bad_checksum: 0,
        bytes_skipped: 0,
        invalid_transitions: 0,
        clamp_events: 0,
        stale_drops: 0,
        malformed_drops: 0,
        stamp: 1,
        seq: 1,
      },
    });
    expect(kind).toBe("heartbeat");
    expect(store.heartbeat?.frames_ok).toBe(5);
  });
});
