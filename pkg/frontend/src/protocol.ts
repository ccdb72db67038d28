// Typed view of the bridge's JSON protocol. Everything arriving on the
// socket funnels through parseInbound() plus a per-topic narrowing helper,
// so the rest of the dashboard never touches untyped JSON. A malformed
// frame is reported, skipped, and never thrown: one bad message should not
// take the UI down.

export const SCAN_BEAMS = 360;

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Quat {
  w: number;
  x: number;
  y: number;
  z: number;
}

export interface EncoderPulse {
  drive_count: number;
  steer_count: number;
  stamp: number;
  seq: number;
}

export interface ImuSample {
  accel: Vec3;
  gyro: Vec3;
  mag: Vec3;
  orientation: Quat;
  /** 0 = sensor-native (x fwd, y right, z down), 1 = x fwd, y left, z up. */
  frame: number;
  stamp: number;
}

export interface LaserScan {
  angle_min: number;
  angle_increment: number;
  range_max: number;
  ranges: number[];
  /** 1 where the beam hit something in range, 0 where it should be skipped. */
  valid: number[];
  stamp: number;
}

export interface Heartbeat {
  frames_ok: number;
  frames_bad_checksum: number;
  bytes_skipped: number;
  invalid_transitions: number;
  clamp_events: number;
  stale_drops: number;
  malformed_drops: number;
  stamp: number;
  seq: number;
}

export interface Push {
  topic: string;
  t: number;
  msg: Record<string, unknown>;
}

export type Inbound =
  | { kind: "push"; push: Push }
  | { kind: "error"; message: string }
  | { kind: "ignored" };

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function asVec3(v: unknown): Vec3 | null {
  if (typeof v !== "object" || v === null) return null;
  const r = v as Record<string, unknown>;
  if (isNum(r["x"]) && isNum(r["y"]) && isNum(r["z"])) {
    return { x: r["x"], y: r["y"], z: r["z"] };
  }
  return null;
}

function asQuat(v: unknown): Quat | null {
  if (typeof v !== "object" || v === null) return null;
  const r = v as Record<string, unknown>;
  if (isNum(r["w"]) && isNum(r["x"]) && isNum(r["y"]) && isNum(r["z"])) {
    return { w: r["w"], x: r["x"], y: r["y"], z: r["z"] };
  }
  return null;
}

function numArray(v: unknown, n: number): number[] | null {
  if (!Array.isArray(v) || v.length !== n) return null;
  for (const x of v) {
    if (typeof x !== "number" || !Number.isFinite(x)) return null;
  }
  return v as number[];
}

/** Classify one raw websocket text frame. */
export function parseInbound(raw: string): Inbound {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return { kind: "ignored" };
  }
  if (typeof obj !== "object" || obj === null) return { kind: "ignored" };
  const rec = obj as Record<string, unknown>;
  if (rec["op"] === "error") {
    const message = typeof rec["message"] === "string" ? rec["message"] : "unknown error";
    return { kind: "error", message };
  }
  if (
    typeof rec["topic"] === "string" &&
    isNum(rec["t"]) &&
    typeof rec["msg"] === "object" &&
    rec["msg"] !== null
  ) {
    return {
      kind: "push",
      push: { topic: rec["topic"], t: rec["t"], msg: rec["msg"] as Record<string, unknown> },
    };
  }
  return { kind: "ignored" };
}

export function asEncoderPulse(msg: Record<string, unknown>): EncoderPulse | null {
  if (
    isNum(msg["drive_count"]) &&
    isNum(msg["steer_count"]) &&
    isNum(msg["stamp"]) &&
    isNum(msg["seq"])
  ) {
    return {
      drive_count: msg["drive_count"],
      steer_count: msg["steer_count"],
      stamp: msg["stamp"],
      seq: msg["seq"],
    };
  }
  return null;
}

export function asImuSample(msg: Record<string, unknown>): ImuSample | null {
  const accel = asVec3(msg["accel"]);
  const gyro = asVec3(msg["gyro"]);
  const mag = asVec3(msg["mag"]);
  const orientation = asQuat(msg["orientation"]);
  if (accel && gyro && mag && orientation && isNum(msg["frame"]) && isNum(msg["stamp"])) {
    return { accel, gyro, mag, orientation, frame: msg["frame"], stamp: msg["stamp"] };
  }
  return null;
}

export function asLaserScan(msg: Record<string, unknown>): LaserScan | null {
  const ranges = numArray(msg["ranges"], SCAN_BEAMS);
  const valid = numArray(msg["valid"], SCAN_BEAMS);
  if (
    ranges &&
    valid &&
    isNum(msg["angle_min"]) &&
    isNum(msg["angle_increment"]) &&
    isNum(msg["range_max"]) &&
    msg["range_max"] > 0 &&
    isNum(msg["stamp"])
  ) {
    return {
      angle_min: msg["angle_min"],
      angle_increment: msg["angle_increment"],
      range_max: msg["range_max"],
      ranges,
      valid,
      stamp: msg["stamp"],
    };
  }
  return null;
}

export function asHeartbeat(msg: Record<string, unknown>): Heartbeat | null {
  const keys = [
    "frames_ok",
    "frames_bad_checksum",
    "bytes_skipped",
    "invalid_transitions",
    "clamp_events",
    "stale_drops",
    "malformed_drops",
    "stamp",
    "seq",
  ] as const;
  const out: Record<string, number> = {};
  for (const k of keys) {
    const v = msg[k];
    if (!isNum(v)) return null;
    out[k] = v;
  }
  return out as unknown as Heartbeat;
}

/** Ask the bridge to start pushing a topic. */
export function buildSubscribe(topic: string): string {
  return JSON.stringify({ op: "subscribe", topic });
}

/** Stop a subscription. */
export function buildUnsubscribe(topic: string): string {
  return JSON.stringify({ op: "unsubscribe", topic });
}

function clamp1(v: number): number {
  return Math.max(-1, Math.min(1, v));
}

/**
 * Outbound joystick frame. Axis order matches the teleop node's wiring:
 * axes[0] steering (positive = left), axes[1] throttle (positive = forward).
 */
export function buildJoy(steering: number, throttle: number): string {
  return JSON.stringify({
    op: "publish",
    topic: "/joy",
    msg: { axes: [clamp1(steering), clamp1(throttle)], buttons: [] },
  });
}
