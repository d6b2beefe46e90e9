// Connection and request state for one device, free of DOM dependencies
// so the protocol behaviour is testable under node. The UI layer
// subscribes to events and calls the async operations.

import {
  ACK, ATTR_GET, ATTR_SET, DONE_LABELS, E_NO_FRAME, E_SCRIPT_ERROR, ERROR,
  FB_FRAME, FB_REQUEST, FORMAT_NAMES, PRINT, SCRIPT_DONE, SCRIPT_EXEC,
  SCRIPT_STOP, SCRIPT_UPLOAD, WireFrame, decodeFrame, encodeFrame,
} from "./protocol.js";

export type ConnectionState = "idle" | "connecting" | "connected" | "retrying" | "closed";

export interface SocketLike {
  binaryType: string;
  send(data: Uint8Array): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface FrameInfo {
  width: number;
  height: number;
  format: string;
  jpeg: Uint8Array;
}

export interface ConsoleLine {
  kind: "print" | "error" | "info";
  text: string;
}

export class ProtocolError extends Error {
  constructor(readonly code: number, message: string) {
    super(message);
  }
}

// Attribute registry, mirroring the server's names.
export const ATTR_NAMES = [
  "framesize", "pixformat", "window", "hmirror", "vflip",
  "brightness", "contrast", "led.red", "led.green", "led.blue", "led.ir",
  "jpeg.quality", "source",
];

export const FRAMESIZE_DIMS: Record<string, [number, number]> = {
  QQVGA: [160, 120],
  QVGA: [320, 240],
  VGA: [640, 480],
};

/** Dimensions promised by a framesize attribute value ("QVGA" or "WxH"). */
export function framesizeDims(value: string): [number, number] | null {
  const preset = FRAMESIZE_DIMS[value];
  if (preset) {
    return preset;
  }
  const match = /^(\d+)x(\d+)$/.exec(value);
  return match ? [parseInt(match[1], 10), parseInt(match[2], 10)] : null;
}

type Category = "script" | "frame" | "attr";

interface Pending {
  category: Category;
  label: string;
  settled: boolean;
  resolve: (frame: WireFrame) => void;
  reject: (err: Error) => void;
  timer: ReturnType<typeof setTimeout>;
}

export interface SessionEvents {
  state: (state: ConnectionState) => void;
  console: (line: ConsoleLine) => void;
  status: (text: string) => void;
  frame: (frame: FrameInfo | null) => void;
  attrs: (attrs: ReadonlyMap<string, string>) => void;
  toast: (message: string) => void;
  scriptError: (message: string, line: number | null) => void;
  done: (status: string, steps: number) => void;
}

const BACKOFF_MS = [500, 1000, 2000, 4000, 8000];

export interface SessionOptions {
  createSocket?: SocketFactory;
  requestTimeoutMs?: number;
  reconnect?: boolean;
}

export class Session {
  state: ConnectionState = "idle";
  scriptRunning = false;
  lastFrame: FrameInfo | null = null;
  readonly attrs = new Map<string, string>();

  private socket: SocketLike | null = null;
  private readonly createSocket: SocketFactory;
  private readonly requestTimeoutMs: number;
  private readonly reconnect: boolean;
  private retryCount = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private closedByUser = false;

  // Responses arrive in request order on one connection; broadcasts
  // (PRINT, SCRIPT_DONE, script errors) are routed around this queue.
  private inflight: Pending[] = [];
  private busy: Record<Category, boolean> = { script: false, frame: false, attr: false };
  private waiting: Record<Category, Array<() => void>> = { script: [], frame: [], attr: [] };

  private listeners: { [K in keyof SessionEvents]: Set<SessionEvents[K]> } = {
    state: new Set(), console: new Set(), status: new Set(), frame: new Set(),
    attrs: new Set(), toast: new Set(), scriptError: new Set(), done: new Set(),
  };

  constructor(readonly endpoint: string, options: SessionOptions = {}) {
    this.createSocket = options.createSocket
      ?? ((url) => {
        const ws = new WebSocket(url);
        ws.binaryType = "arraybuffer";
        return ws as unknown as SocketLike;
      });
    this.requestTimeoutMs = options.requestTimeoutMs ?? 5000;
    this.reconnect = options.reconnect ?? true;
  }

  on<K extends keyof SessionEvents>(event: K, fn: SessionEvents[K]): () => void {
    this.listeners[event].add(fn);
    return () => this.listeners[event].delete(fn);
  }

  private emit<K extends keyof SessionEvents>(event: K, ...args: Parameters<SessionEvents[K]>): void {
    for (const fn of this.listeners[event]) {
      (fn as (...a: Parameters<SessionEvents[K]>) => void)(...args);
    }
  }

  connect(): void {
    if (this.state === "connected" || this.state === "connecting") {
      return;
    }
    this.closedByUser = false;
    this.setState("connecting");
    this.openSocket();
  }

  /** Resolves once the connection is up (or rejects when closed first). */
  ready(timeoutMs = 10000): Promise<void> {
    if (this.state === "connected") {
      return Promise.resolve();
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        off();
        reject(new Error("connect timed out"));
      }, timeoutMs);
      const off = this.on("state", (state) => {
        if (state === "connected") {
          clearTimeout(timer);
          off();
          resolve();
        } else if (state === "closed") {
          clearTimeout(timer);
          off();
          reject(new Error("connection closed"));
        }
      });
    });
  }

  close(): void {
    this.closedByUser = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.stopPolling();
    this.socket?.close();
    this.socket = null;
    this.failAll(new Error("session closed"));
    this.setState("closed");
  }

  // -- operations ----------------------------------------------------------

  /** Upload then execute; print output streams as console events and
   * completion arrives as a done event. Resolves once execution starts. */
  async runScript(source: string): Promise<void> {
    this.emit("status", "uploading");
    await this.request("script", SCRIPT_UPLOAD, utf8(source), "script upload");
    try {
      await this.request("script", SCRIPT_EXEC, new Uint8Array(0), "script exec");
    } catch (err) {
      this.emit("status", "exec rejected");
      if (err instanceof ProtocolError && err.code === E_SCRIPT_ERROR) {
        this.emit("console", { kind: "error", text: err.message });
        this.emit("scriptError", err.message, parseErrorLine(err.message));
      }
      throw err;
    }
    this.scriptRunning = true;
    this.emit("status", "running");
  }

  async stopScript(): Promise<void> {
    await this.request("script", SCRIPT_STOP, new Uint8Array(0), "script stop");
  }

  async getAttr(name: string): Promise<string> {
    const reply = await this.request("attr", ATTR_GET, utf8(name), `get ${name}`);
    const value = text(reply.payload);
    this.attrs.set(name, value);
    this.emit("attrs", this.attrs);
    return value;
  }

  /** Sends the new value, then re-reads it so the cache holds the
   * server's canonical form. */
  async setAttr(name: string, value: string): Promise<string> {
    const payload = new Uint8Array(name.length + 1 + utf8(value).length);
    payload.set(utf8(name), 0);
    payload[name.length] = 0;
    payload.set(utf8(value), name.length + 1);
    await this.request("attr", ATTR_SET, payload, `set ${name}`);
    return this.getAttr(name);
  }

  async refreshAttrs(): Promise<void> {
    for (const name of ATTR_NAMES) {
      await this.getAttr(name);
    }
  }

  /** One frame-buffer poll; null means the device has no frame yet. */
  async requestFrame(): Promise<FrameInfo | null> {
    let reply: WireFrame;
    try {
      reply = await this.request("frame", FB_REQUEST, new Uint8Array(0), "frame request");
    } catch (err) {
      if (err instanceof ProtocolError && err.code === E_NO_FRAME) {
        this.emit("frame", null);
        return null;
      }
      throw err;
    }
    const view = new DataView(reply.payload.buffer, reply.payload.byteOffset);
    const frame: FrameInfo = {
      width: view.getUint16(0, true),
      height: view.getUint16(2, true),
      format: FORMAT_NAMES[reply.payload[4]] ?? `format ${reply.payload[4]}`,
      jpeg: reply.payload.slice(5),
    };
    this.lastFrame = frame;
    this.emit("frame", frame);
    return frame;
  }

  startPolling(intervalMs: number): void {
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      // Skip a tick rather than queue behind a slow request.
      if (this.state === "connected" && !this.busy.frame) {
        void this.requestFrame().catch(() => undefined);
      }
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // -- wiring ----------------------------------------------------------------

  private openSocket(): void {
    let socket: SocketLike;
    try {
      socket = this.createSocket(this.endpoint);
    } catch {
      this.scheduleRetry();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.retryCount = 0;
      this.setState("connected");
      void this.refreshAttrs().catch(() => undefined);
    };
    socket.onmessage = (event) => {
      const data = asBytes(event.data);
      if (data !== null) {
        this.handleData(data);
      }
    };
    socket.onerror = () => undefined; // close always follows
    socket.onclose = () => {
      if (this.socket !== socket) {
        return;
      }
      this.socket = null;
      this.failAll(new Error("connection lost"));
      if (!this.closedByUser) {
        this.scheduleRetry();
      }
    };
  }

  private scheduleRetry(): void {
    if (this.closedByUser || !this.reconnect) {
      this.setState("closed");
      return;
    }
    const delay = BACKOFF_MS[Math.min(this.retryCount, BACKOFF_MS.length - 1)];
    this.retryCount++;
    this.setState("retrying");
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.openSocket();
    }, delay);
  }

  private setState(state: ConnectionState): void {
    if (this.state !== state) {
      this.state = state;
      this.emit("state", state);
    }
  }

  private request(category: Category, ftype: number, payload: Uint8Array,
                  label: string): Promise<WireFrame> {
    return new Promise<WireFrame>((resolve, reject) => {
      const start = () => {
        if (this.socket === null || this.state !== "connected") {
          this.finishCategory(category);
          reject(new Error(`${label}: not connected`));
          return;
        }
        const pending: Pending = {
          category, label, settled: false,
          resolve: (frame) => {
            if (!pending.settled) {
              pending.settled = true;
              clearTimeout(pending.timer);
              this.finishCategory(category);
              resolve(frame);
            }
          },
          reject: (err) => {
            if (!pending.settled) {
              pending.settled = true;
              clearTimeout(pending.timer);
              this.finishCategory(category);
              reject(err);
            }
          },
          timer: setTimeout(() => {
            // The slot stays in the queue so a late reply still lines up.
            this.emit("toast", `${label} timed out after ${this.requestTimeoutMs / 1000} s`);
            pending.reject(new Error(`${label} timed out`));
          }, this.requestTimeoutMs),
        };
        this.inflight.push(pending);
        this.socket.send(encodeFrame(ftype, payload));
      };
      if (this.busy[category]) {
        this.waiting[category].push(start);
      } else {
        this.busy[category] = true;
        start();
      }
    });
  }

  private finishCategory(category: Category): void {
    const next = this.waiting[category].shift();
    if (next !== undefined) {
      next();
    } else {
      this.busy[category] = false;
    }
  }

  private failAll(err: Error): void {
    const pending = this.inflight;
    this.inflight = [];
    for (const p of pending) {
      p.reject(err);
    }
    for (const category of ["script", "frame", "attr"] as Category[]) {
      const queued = this.waiting[category];
      this.waiting[category] = [];
      this.busy[category] = false;
      for (const start of queued) {
        start(); // each rejects immediately: the socket is gone
      }
    }
  }

  private handleData(data: Uint8Array): void {
    // Websocket transport preserves message boundaries, so each binary
    // message is one complete frame.
    let frame: WireFrame;
    try {
      frame = decodeFrame(data).frame;
    } catch {
      return;
    }
    this.handleFrame(frame);
  }

  private handleFrame(frame: WireFrame): void {
    switch (frame.type) {
      case PRINT: {
        const body = text(frame.payload);
        for (const line of body.replace(/\n$/, "").split("\n")) {
          this.emit("console", { kind: "print", text: line });
        }
        return;
      }
      case SCRIPT_DONE: {
        const view = new DataView(frame.payload.buffer, frame.payload.byteOffset);
        const label = DONE_LABELS[frame.payload[0]] ?? `status ${frame.payload[0]}`;
        const steps = Number(view.getBigUint64(1, true));
        this.scriptRunning = false;
        this.emit("status", `done (${label})`);
        this.emit("done", label, steps);
        return;
      }
      case ACK:
      case FB_FRAME: {
        const head = this.popInflight();
        head?.resolve(frame);
        return;
      }
      case ERROR: {
        const code = frame.payload[0];
        const message = text(frame.payload.slice(1));
        if (code === E_SCRIPT_ERROR && (this.inflight.length === 0
            || this.inflight[0].category !== "script")) {
          // Broadcast failure of the running script, not a reply.
          this.scriptRunning = false;
          this.emit("console", { kind: "error", text: message });
          this.emit("scriptError", message, parseErrorLine(message));
          return;
        }
        const head = this.popInflight();
        if (head !== null) {
          head.reject(new ProtocolError(code, message));
        } else {
          this.emit("toast", message);
        }
        return;
      }
      default:
        return; // unknown event types are ignored
    }
  }

  private popInflight(): Pending | null {
    const head = this.inflight.shift();
    if (head === undefined) {
      return null;
    }
    if (head.settled) {
      return null; // late reply to a timed-out request: drop it
    }
    return head;
  }
}

export function parseErrorLine(message: string): number | null {
  const match = /line (\d+)/.exec(message);
  return match ? parseInt(match[1], 10) : null;
}

function utf8(value: string): Uint8Array {
  return new TextEncoder().encode(value);
}

function text(payload: Uint8Array): string {
  return new TextDecoder().decode(payload);
}

function asBytes(data: unknown): Uint8Array | null {
  if (data instanceof ArrayBuffer) {
    return new Uint8Array(data);
  }
  if (ArrayBuffer.isView(data)) {
    return new Uint8Array(data.buffer, data.byteOffset, data.byteLength);
  }
  return null; // text messages are not part of the protocol
}
