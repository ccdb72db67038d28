// Dashboard entry point: wires the tested modules (client, ramp, store,
// scanview, recorder) to the DOM. Logic here stays thin on purpose; if a
// branch feels worth testing, it belongs in one of those modules instead.

import { BridgeClient, ConnectionStatus } from "./client.js";
import { InputRamp } from "./ramp.js";
import { TelemetryStore } from "./store.js";
import { drawScan } from "./scanview.js";
import { SessionRecorder } from "./recorder.js";
import { JOY_RATE_HZ } from "./constants.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node as T;
}

const statusPill = el<HTMLSpanElement>("status-pill");
const urlInput = el<HTMLInputElement>("bridge-url");
const connectBtn = el<HTMLButtonElement>("connect-btn");
const stickPad = el<HTMLDivElement>("stick-pad");
const stickKnob = el<HTMLDivElement>("stick-knob");
const scanCanvas = el<HTMLCanvasElement>("scan-canvas");
const recordBtn = el<HTMLButtonElement>("record-btn");
const downloadBtn = el<HTMLButtonElement>("download-btn");
const resetPoseBtn = el<HTMLButtonElement>("reset-pose-btn");
const errorLine = el<HTMLDivElement>("error-line");

const readouts = {
  speed: el<HTMLSpanElement>("speed-val"),
  steering: el<HTMLSpanElement>("steering-val"),
  driveCount: el<HTMLSpanElement>("drive-count-val"),
  steerCount: el<HTMLSpanElement>("steer-count-val"),
  pose: el<HTMLSpanElement>("pose-val"),
  throttleAxis: el<HTMLSpanElement>("throttle-axis-val"),
  steeringAxis: el<HTMLSpanElement>("steering-axis-val"),
  heartbeat: el<HTMLSpanElement>("heartbeat-val"),
  link: el<HTMLSpanElement>("link-val"),
  record: el<HTMLSpanElement>("record-val"),
};

urlInput.value = `ws://${location.host || "127.0.0.1:9090"}/`;

const ramp = new InputRamp();
const store = new TelemetryStore();
const recorder = new SessionRecorder();
let scanDirty = true;

let client: BridgeClient | null = null;

function setStatus(status: ConnectionStatus): void {
  statusPill.textContent = status;
  statusPill.className = `pill pill-${status}`;
  connectBtn.textContent = status === "closed" ? "Connect" : "Disconnect";
}
setStatus("closed");

function makeClient(): BridgeClient {
  return new BridgeClient({
    url: urlInput.value.trim(),
    onStatus: setStatus,
    onBridgeError: (message) => {
      errorLine.textContent = `bridge: ${message}`;
    },
    onPush: (push) => {
      recorder.onPush(push);
      if (store.onPush(push) === "scan") scanDirty = true;
    },
  });
}

connectBtn.addEventListener("click", () => {
  if (client && statusPill.textContent !== "closed") {
    client.close();
    client = null;
    return;
  }
  errorLine.textContent = "";
  client = makeClient();
  client.connect();
});

// --- input: keyboard -------------------------------------------------------

window.addEventListener("keydown", (ev) => {
  if (ramp.keyDown(ev.code)) ev.preventDefault();
});
window.addEventListener("keyup", (ev) => {
  if (ramp.keyUp(ev.code)) ev.preventDefault();
});

// Hidden tab or lost focus: drop to neutral immediately and push one frame
// out right away rather than waiting for the (possibly throttled) timer.
function goNeutral(): void {
  ramp.snapNeutral();
  client?.publishJoy(0, 0);
}
document.addEventListener("visibilitychange", () => {
  if (document.hidden) goNeutral();
});
window.addEventListener("blur", goNeutral);

// --- input: on-screen stick -------------------------------------------------

function stickFromPointer(ev: PointerEvent): void {
  const rect = stickPad.getBoundingClientRect();
  const radius = rect.width / 2;
  const dx = ev.clientX - (rect.left + radius);
  const dy = ev.clientY - (rect.top + radius);
  // Drag left => steer left (positive); drag up => throttle forward.
  ramp.setStick(-dx / radius, -dy / radius);
}

let stickPointer: number | null = null;
stickPad.addEventListener("pointerdown", (ev) => {
  stickPointer = ev.pointerId;
  stickPad.setPointerCapture(ev.pointerId);
  stickFromPointer(ev);
});
stickPad.addEventListener("pointermove", (ev) => {
  if (stickPointer === ev.pointerId) stickFromPointer(ev);
});
function releaseStick(ev: PointerEvent): void {
  if (stickPointer === ev.pointerId) {
    stickPointer = null;
    ramp.clearStick();
  }
}
stickPad.addEventListener("pointerup", releaseStick);
stickPad.addEventListener("pointercancel", releaseStick);

// --- recording --------------------------------------------------------------

recordBtn.addEventListener("click", () => {
  if (recorder.recording) {
    recorder.stop();
    recordBtn.textContent = "Record";
  } else {
    recorder.start();
    recordBtn.textContent = "Stop";
  }
});

downloadBtn.addEventListener("click", () => {
  const text = recorder.toJsonl();
  if (!text) return;
  const blob = new Blob([text], { type: "application/jsonl" });
  const href = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = href;
  a.download = "telemetry.jsonl";
  a.click();
  URL.revokeObjectURL(href);
});

resetPoseBtn.addEventListener("click", () => store.resetPose());

// --- command loop: 20 Hz, dt-corrected --------------------------------------

let lastTick = performance.now();
setInterval(() => {
  const now = performance.now();
  const dt = Math.min(0.25, (now - lastTick) / 1000);
  lastTick = now;
  const axes = ramp.step(dt);
  client?.publishJoy(axes.steering, axes.throttle);
  updatePanels(axes.steering, axes.throttle);
  updateKnob(axes.steering, axes.throttle);
}, 1000 / JOY_RATE_HZ);

// --- rendering ---------------------------------------------------------------

function updateKnob(steering: number, throttle: number): void {
  const radius = stickPad.clientWidth / 2;
  const kx = -steering * radius * 0.7;
  const ky = -throttle * radius * 0.7;
  stickKnob.style.transform = `translate(${kx.toFixed(1)}px, ${ky.toFixed(1)}px)`;
}

function fmt(v: number, digits = 2): string {
  return v.toFixed(digits);
}

function updatePanels(steering: number, throttle: number): void {
  readouts.speed.textContent = `${fmt(store.speedMps)} m/s`;
  readouts.steering.textContent = `${fmt((store.steeringRad * 180) / Math.PI, 1)} deg`;
  readouts.driveCount.textContent = store.encoder ? String(store.encoder.drive_count) : "-";
  readouts.steerCount.textContent = store.encoder ? String(store.encoder.steer_count) : "-";
  const p = store.pose;
  readouts.pose.textContent = `x ${fmt(p.x)}  y ${fmt(p.y)}  yaw ${fmt((p.yaw * 180) / Math.PI, 1)}`;
  readouts.throttleAxis.textContent = fmt(throttle);
  readouts.steeringAxis.textContent = fmt(steering);
  const hb = store.heartbeat;
  readouts.heartbeat.textContent = hb
    ? `ok ${hb.frames_ok}  bad_ck ${hb.frames_bad_checksum}  skipped ${hb.bytes_skipped}`
    : "-";
  const stats = client?.stats;
  readouts.link.textContent = stats
    ? `sent ${stats.sentJoy}  recv ${stats.received}  dropped ${stats.droppedWhileDisconnected}  reconnects ${stats.reconnects}`
    : "-";
  readouts.record.textContent = recorder.recording
    ? `recording (${recorder.count})`
    : recorder.count > 0
      ? `${recorder.count} msgs captured`
      : "idle";
  downloadBtn.disabled = recorder.recording || recorder.count === 0;
}

const scanCtx = scanCanvas.getContext("2d");
function renderLoop(): void {
  if (scanDirty && scanCtx) {
    drawScan(scanCtx, scanCanvas.width, scanCanvas.height, store.scan);
    scanDirty = false;
  }
  requestAnimationFrame(renderLoop);
}
requestAnimationFrame(renderLoop);
