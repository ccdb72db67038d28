// Polar LIDAR plot, vehicle-centered with the heading pointing up.
//
// Pure drawing: the function takes a structural subset of a 2D canvas
// context, so tests can hand it a recording stub instead of a real canvas.

import { LaserScan } from "./protocol.js";
import { SCAN_RANGE_MAX_M } from "./constants.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
}

export interface ScanTheme {
  background: string;
  grid: string;
  beam: string;
  vehicle: string;
}

export const DARK_THEME: ScanTheme = {
  background: "#10151c",
  grid: "#2a3442",
  beam: "#5ad8a6",
  vehicle: "#e8b339",
};

const MARGIN_PX = 8;
const DOT_PX = 2;

/**
 * Render one scan. Beam i sits at angle_min + i * angle_increment,
 * counterclockwise from the vehicle heading; the heading points up, so a
 * return on the left of the vehicle lands on the left of the plot. A beam
 * at range_max touches the outer ring. Invalid beams are skipped.
 *
 * Returns how many beams were drawn (null scan draws just the backdrop).
 */
export function drawScan(
  ctx: Ctx2D,
  width: number,
  height: number,
  scan: LaserScan | null,
  theme: ScanTheme = DARK_THEME,
): number {
  const cx = width / 2;
  const cy = height / 2;
  const plotRadius = Math.min(width, height) / 2 - MARGIN_PX;
  const rangeMax = scan ? scan.range_max : SCAN_RANGE_MAX_M;

  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = theme.background;
  ctx.fillRect(0, 0, width, height);

  // Range rings every meter, plus the outer limit.
  ctx.strokeStyle = theme.grid;
  ctx.lineWidth = 1;
  for (let m = 1; m <= Math.floor(rangeMax); m += 1) {
    ctx.beginPath();
    ctx.arc(cx, cy, (m / rangeMax) * plotRadius, 0, 2 * Math.PI);
    ctx.stroke();
  }

  // Heading tick: straight up from the vehicle.
  ctx.strokeStyle = theme.vehicle;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx, cy - plotRadius * 0.18);
  ctx.stroke();

  if (!scan) return 0;

  const scale = plotRadius / rangeMax;
  ctx.fillStyle = theme.beam;
  let drawn = 0;
  for (let i = 0; i < scan.ranges.length; i += 1) {
    if (!scan.valid[i]) continue;
    const r = scan.ranges[i]!;
    const theta = scan.angle_min + i * scan.angle_increment;
    // Vehicle frame: x forward, y left. Screen: forward is up, left is left.
    const fx = r * Math.cos(theta);
    const fy = r * Math.sin(theta);
    const px = cx - fy * scale;
    const py = cy - fx * scale;
    ctx.fillRect(px - DOT_PX / 2, py - DOT_PX / 2, DOT_PX, DOT_PX);
    drawn += 1;
  }
  return drawn;
}
