// Physical constants mirrored from the simulator's default plant so the
// dashboard can turn raw encoder counts into human units without a second
// round trip. If you run the sim with a custom plant config, adjust these
// to match or the speed/steering readouts will be scaled wrong.

/** Wheel radius in meters. */
export const WHEEL_RADIUS_M = 0.1;

/** Quadrature edges per electrical revolution of the encoder. */
export const ENCODER_PPR = 600;

/** Motor revs per wheel rev on the drive side. */
export const DRIVE_GEAR_RATIO = 5.0;

/** Motor revs per steering-column rev. */
export const STEER_GEAR_RATIO = 3.0;

/** Quadrature gives 4 countable edges per pulse. */
export const EDGES_PER_PULSE = 4;

/** Meters of ground travel per drive encoder count. */
export const DRIVE_METERS_PER_COUNT =
  (2 * Math.PI * WHEEL_RADIUS_M) / (EDGES_PER_PULSE * ENCODER_PPR * DRIVE_GEAR_RATIO);

/** Radians of steering-column angle per steer encoder count. */
export const STEER_RADIANS_PER_COUNT =
  (2 * Math.PI) / (EDGES_PER_PULSE * ENCODER_PPR * STEER_GEAR_RATIO);

/** How fast the sim's LIDAR can see, used to scale the scan plot. */
export const SCAN_RANGE_MAX_M = 5.0;

/** Outbound joystick rate while the link is up. */
export const JOY_RATE_HZ = 20;

/** Topics the dashboard wants pushed over the bridge. */
export const TELEMETRY_TOPICS = [
  "/encoder_pulse",
  "/imu",
  "/scan",
  "/heartbeat",
] as const;

/** The only topic the bridge accepts from us. */
export const JOY_TOPIC = "/joy";
