import { describe, expect, it } from "vitest";

import { LaserScan, SCAN_BEAMS } from "../src/protocol.js";
import { Ctx2D, drawScan } from "../src/scanview.js";

class RecordingCtx implements Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  rects: { x: number; y: number; w: number; h: number; style: unknown }[] = [];
  arcs: { x: number; y: number; r: number }[] = [];
  cleared = 0;

  clearRect(): void {
    this.cleared += 1;
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push({ x, y, w, h, style: this.fillStyle });
  }
  beginPath(): void {}
  arc(x: number, y: number, r: number): void {
    this.arcs.push({ x, y, r });
  }
  moveTo(): void {}
  lineTo(): void {}
  stroke(): void {}
}

const W = 400;
const H = 400;
const CX = W / 2;
const CY = H / 2;
const PLOT_RADIUS = W / 2 - 8;

function makeScan(edits: Map<number, number>, rangeMax = 5): LaserScan {
  const ranges = new Array<number>(SCAN_BEAMS).fill(0);
  const valid = new Array<number>(SCAN_BEAMS).fill(0);
  for (const [beam, r] of edits) {
    ranges[beam] = r;
    valid[beam] = 1;
  }
  return {
    angle_min: 0,
    angle_increment: (2 * Math.PI) / SCAN_BEAMS,
    range_max: rangeMax,
    ranges,
    valid,
    stamp: 0,
  };
}

/** Beam dots are the 2x2 rects; the backdrop is the one full-size rect. */
function beamDots(ctx: RecordingCtx) {
  return ctx.rects.filter((r) => r.w === 2 && r.h === 2);
}

describe("drawScan", () => {
  it("draws only the backdrop for a null scan", () => {
    const ctx = new RecordingCtx();
    expect(drawScan(ctx, W, H, null)).toBe(0);
    expect(ctx.cleared).toBe(1);
    expect(ctx.rects).toHaveLength(1);
    expect(ctx.arcs.length).toBeGreaterThanOrEqual(5);
  });

  it("draws nothing extra for an all-invalid scan", () => {
    const ctx = new RecordingCtx();
    expect(drawScan(ctx, W, H, makeScan(new Map()))).toBe(0);
    expect(beamDots(ctx)).toHaveLength(0);
  });

  it("puts a forward return straight up from center", () => {
    const ctx = new RecordingCtx();
    drawScan(ctx, W, H, makeScan(new Map([[0, 2.5]])));
    const dots = beamDots(ctx);
    expect(dots).toHaveLength(1);
    const dot = dots[0]!;
    expect(dot.x + 1).toBeCloseTo(CX, 9);
    expect(dot.y + 1).toBeCloseTo(CY - (2.5 / 5) * PLOT_RADIUS, 9);
  });

  it("a return at range_max touches the plot edge", () => {
    const ctx = new RecordingCtx();
    drawScan(ctx, W, H, makeScan(new Map([[0, 5]])));
    const dot = beamDots(ctx)[0]!;
    expect(dot.y + 1).toBeCloseTo(CY - PLOT_RADIUS, 9);
  });

  it("beam 90 (counterclockwise, vehicle left) lands left of center", () => {
    const ctx = new RecordingCtx();
    drawScan(ctx, W, H, makeScan(new Map([[90, 4]])));
    const dot = beamDots(ctx)[0]!;
    expect(dot.x + 1).toBeCloseTo(CX - (4 / 5) * PLOT_RADIUS, 6);
    expect(dot.y + 1).toBeCloseTo(CY, 6);
  });

  it("beam 270 lands right of center", () => {
    const ctx = new RecordingCtx();
    drawScan(ctx, W, H, makeScan(new Map([[270, 1]])));
    const dot = beamDots(ctx)[0]!;
    expect(dot.x + 1).toBeCloseTo(CX + (1 / 5) * PLOT_RADIUS, 6);
    expect(dot.y + 1).toBeCloseTo(CY, 6);
  });

  it("counts every valid beam it draws", () => {
    const ctx = new RecordingCtx();
    const edits = new Map<number, number>();
    for (let i = 0; i < SCAN_BEAMS; i += 3) edits.set(i, 1 + (i % 40) / 10);
    const drawn = drawScan(ctx, W, H, makeScan(edits));
    expect(drawn).toBe(edits.size);
    expect(beamDots(ctx)).toHaveLength(edits.size);
  });

  it("scales rings to the scan's own range_max", () => {
    const ctx = new RecordingCtx();
    drawScan(ctx, W, H, makeScan(new Map([[0, 10]]), 10));
    // 10 rings for a 10 m scan, the outermost at the plot radius.
    expect(ctx.arcs).toHaveLength(10);
    expect(Math.max(...ctx.arcs.map((a) => a.r))).toBeCloseTo(PLOT_RADIUS, 9);
  });
});
