// WebSocket link to the simulator bridge.
//
// The client owns three behaviors the rest of the UI should never have to
// think about:
//   1. the command gate: publishJoy() silently drops (and counts) anything
//      attempted while the socket is not open, so a dead link can never
//      emit stale commands;
//   2. reconnect with capped exponential backoff, re-subscribing to the
//      telemetry topics on every successful open;
//   3. normalizing inbound frames through parseInbound() before the app
//      sees them.
//
// The WebSocket constructor is injected so tests can run against a fake
// (or the `ws` package under Node, where there is no global WebSocket).

import { buildJoy, buildSubscribe, parseInbound, Push } from "./protocol.js";
import { TELEMETRY_TOPICS } from "./constants.js";

const OPEN = 1;

// Minimal structural view of a socket, satisfied by both the browser
// WebSocket and the `ws` package. Handler slots are `any` on purpose:
// the two implementations disagree on event types and we only read .data.
export interface WsLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  /* eslint-disable @typescript-eslint/no-explicit-any */
  onopen: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  /* eslint-enable @typescript-eslint/no-explicit-any */
}

export type WsCtor = new (url: string) => WsLike;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface LinkStats {
  sentJoy: number;
  received: number;
  droppedWhileDisconnected: number;
  reconnects: number;
  bridgeErrors: number;
}

export interface BridgeClientOptions {
  url: string;
  topics?: readonly string[];
  WebSocketImpl?: WsCtor;
  backoffInitialMs?: number;
  backoffMaxMs?: number;
  onStatus?: (status: ConnectionStatus) => void;
  onPush?: (push: Push) => void;
  onBridgeError?: (message: string) => void;
}

const BACKOFF_INITIAL_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class BridgeClient {
  readonly stats: LinkStats = {
    sentJoy: 0,
    received: 0,
    droppedWhileDisconnected: 0,
    reconnects: 0,
    bridgeErrors: 0,
  };

  private readonly url: string;
  private readonly topics: readonly string[];
  private readonly makeSocket: WsCtor;
  private readonly backoffInitialMs: number;
  private readonly backoffMaxMs: number;
  private readonly onStatus: (status: ConnectionStatus) => void;
  private readonly onPush: (push: Push) => void;
  private readonly onBridgeError: (message: string) => void;

  private ws: WsLike | null = null;
  private retryMs: number;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private closedByUser = false;
  private everOpened = false;

  constructor(opts: BridgeClientOptions) {
    const impl = opts.WebSocketImpl ?? (globalThis as { WebSocket?: WsCtor }).WebSocket;
    if (!impl) {
      throw new Error("no WebSocket implementation available; pass WebSocketImpl");
    }
    this.url = opts.url;
    this.topics = opts.topics ?? TELEMETRY_TOPICS;
    this.makeSocket = impl;
    this.backoffInitialMs = opts.backoffInitialMs ?? BACKOFF_INITIAL_MS;
    this.backoffMaxMs = opts.backoffMaxMs ?? BACKOFF_MAX_MS;
    this.retryMs = this.backoffInitialMs;
    this.onStatus = opts.onStatus ?? (() => undefined);
    this.onPush = opts.onPush ?? (() => undefined);
    this.onBridgeError = opts.onBridgeError ?? (() => undefined);
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === OPEN;
  }

  /** Open the link (or restart it after a user close()). */
  connect(): void {
    this.closedByUser = false;
    if (this.ws !== null || this.retryTimer !== null) return;
    this.open();
  }

  /** Tear the link down and stop reconnecting. */
  close(): void {
    this.closedByUser = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    const sock = this.ws;
    this.ws = null;
    if (sock) {
      sock.onopen = null;
      sock.onclose = null;
      sock.onerror = null;
      sock.onmessage = null;
      try {
        sock.close();
      } catch {
        // already dead; nothing to release
      }
    }
    this.onStatus("closed");
  }

  /**
   * Send one joystick frame. Returns true if it went out. While the
   * socket is anything but open the frame is dropped and counted, never
   * queued: a queued command arriving after reconnect would be stale.
   */
  publishJoy(steering: number, throttle: number): boolean {
    if (!this.connected || this.ws === null) {
      this.stats.droppedWhileDisconnected += 1;
      return false;
    }
    try {
      this.ws.send(buildJoy(steering, throttle));
    } catch {
      this.stats.droppedWhileDisconnected += 1;
      return false;
    }
    this.stats.sentJoy += 1;
    return true;
  }

  private open(): void {
    this.onStatus("connecting");
    let sock: WsLike;
    try {
      sock = new this.makeSocket(this.url);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.ws = sock;
    sock.onopen = () => {
      if (this.ws !== sock) return;
      if (this.everOpened) this.stats.reconnects += 1;
      this.everOpened = true;
      this.retryMs = this.backoffInitialMs;
      for (const topic of this.topics) {
        sock.send(buildSubscribe(topic));
      }
      this.onStatus("open");
    };
    sock.onmessage = (ev: { data: unknown }) => {
      if (this.ws !== sock) return;
      this.handleRaw(ev.data);
    };
    sock.onerror = () => {
      // The close event that follows carries the retry logic; swallowing
      // the error here just keeps Node's EventEmitter from throwing.
    };
    sock.onclose = () => {
      if (this.ws !== sock) return;
      this.ws = null;
      this.scheduleRetry();
    };
  }

  private scheduleRetry(): void {
    if (this.closedByUser) {
      this.onStatus("closed");
      return;
    }
    this.onStatus("connecting");
    const delay = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, this.backoffMaxMs);
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      if (!this.closedByUser) this.open();
    }, delay);
  }

  private handleRaw(data: unknown): void {
    const text =
      typeof data === "string"
        ? data
        : data instanceof Uint8Array
          ? new TextDecoder().decode(data)
          : String(data);
    const inbound = parseInbound(text);
    switch (inbound.kind) {
      case "push":
        this.stats.received += 1;
        this.onPush(inbound.push);
        break;
      case "error":
        this.stats.bridgeErrors += 1;
        this.onBridgeError(inbound.message);
        break;
      case "ignored":
        break;
    }
  }
}
