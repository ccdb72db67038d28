// Keyboard and on-screen-stick input, shaped into smooth joystick axes.
//
// Raw +/-1 keyboard steps make the plant lurch, so held keys ramp toward
// full deflection over FULL_DEFLECTION_S and back to center at the same
// rate. The on-screen stick is already analog and maps straight through
// while it is being dragged; letting go ramps home from wherever it was.

export const FULL_DEFLECTION_S = 0.3;

export interface Axes {
  steering: number;
  throttle: number;
}

const KEY_STEERING: Record<string, number> = {
  ArrowLeft: 1,
  KeyA: 1,
  ArrowRight: -1,
  KeyD: -1,
};

const KEY_THROTTLE: Record<string, number> = {
  ArrowUp: 1,
  KeyW: 1,
  ArrowDown: -1,
  KeyS: -1,
};

function clamp1(v: number): number {
  return Math.max(-1, Math.min(1, v));
}

function approach(current: number, target: number, maxStep: number): number {
  const d = target - current;
  if (Math.abs(d) <= maxStep) return target;
  return current + Math.sign(d) * maxStep;
}

export class InputRamp {
  private held = new Set<string>();
  private stick: Axes | null = null;
  private steering = 0;
  private throttle = 0;

  /** Returns true when the key is one we own, so the caller can preventDefault. */
  keyDown(code: string): boolean {
    if (!(code in KEY_STEERING) && !(code in KEY_THROTTLE)) return false;
    this.held.add(code);
    return true;
  }

  keyUp(code: string): boolean {
    if (!(code in KEY_STEERING) && !(code in KEY_THROTTLE)) return false;
    this.held.delete(code);
    return true;
  }

  /** Direct analog input from the on-screen stick; clamped into [-1,1]^2. */
  setStick(steering: number, throttle: number): void {
    this.stick = { steering: clamp1(steering), throttle: clamp1(throttle) };
  }

  /** Stick released: ramp back toward whatever the keyboard asks for. */
  clearStick(): void {
    this.stick = null;
  }

  /** Hidden tab or defocus: drop all input and zero the axes right now. */
  snapNeutral(): void {
    this.held.clear();
    this.stick = null;
    this.steering = 0;
    this.throttle = 0;
  }

  /** Where the axes are headed (before ramping). */
  target(): Axes {
    if (this.stick) return { ...this.stick };
    let steering = 0;
    let throttle = 0;
    for (const code of this.held) {
      steering += KEY_STEERING[code] ?? 0;
      throttle += KEY_THROTTLE[code] ?? 0;
    }
    return { steering: clamp1(steering), throttle: clamp1(throttle) };
  }

  /** Advance the ramp by dt seconds and return the shaped axes. */
  step(dt: number): Axes {
    if (this.stick) {
      this.steering = this.stick.steering;
      this.throttle = this.stick.throttle;
    } else {
      const maxStep = Math.max(0, dt) / FULL_DEFLECTION_S;
      const t = this.target();
      this.steering = approach(this.steering, t.steering, maxStep);
      this.throttle = approach(this.throttle, t.throttle, maxStep);
    }
    return { steering: this.steering, throttle: this.throttle };
  }

  /** Current shaped axes without advancing time. */
  current(): Axes {
    return { steering: this.steering, throttle: this.throttle };
  }
}
