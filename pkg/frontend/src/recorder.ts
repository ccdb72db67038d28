// Browser-side telemetry capture: while armed, every push is kept as one
// JSONL line in the shape it arrived ({topic, t, msg}). This is a quick
// tap on the bridge stream for eyeballing in a notebook, not a substitute
// for the simulator's own synchronized session recorder.

import { Push } from "./protocol.js";

export class SessionRecorder {
  private lines: string[] = [];
  private armed = false;

  get recording(): boolean {
    return this.armed;
  }

  get count(): number {
    return this.lines.length;
  }

  /** Arm and clear any previous capture. */
  start(): void {
    this.lines = [];
    this.armed = true;
  }

  stop(): void {
    this.armed = false;
  }

  onPush(push: Push): void {
    if (!this.armed) return;
    this.lines.push(JSON.stringify({ topic: push.topic, t: push.t, msg: push.msg }));
  }

  /** The capture as JSONL text (empty string when nothing was recorded). */
  toJsonl(): string {
    return this.lines.length === 0 ? "" : this.lines.join("\n") + "\n";
  }
}
