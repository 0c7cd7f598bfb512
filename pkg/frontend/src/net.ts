/**
 * WebSocket client with reconnect.
 *
 * On drop it retries on a short timer so rendering resumes within a frame
 * period of the server coming back, without a page reload. The socket
 * constructor is injected for tests.
 */

import { Envelope, Outbound, parseServerMessage } from "./protocol.js";

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TeleopClientOptions {
  url: string;
  socketFactory?: SocketFactory;
  reconnectDelayMs?: number;
  onMessage: (msg: Envelope) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
}

export class TeleopClient {
  readonly outbound = new Outbound();
  private socket: SocketLike | null = null;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly opts: TeleopClientOptions) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const factory = this.opts.socketFactory
      ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.opts.onStatus("connecting");
    const socket = factory(this.opts.url);
    this.socket = socket;
    socket.onopen = () => this.opts.onStatus("open");
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg !== null) this.opts.onMessage(msg);
    };
    socket.onerror = () => { /* onclose follows */ };
    socket.onclose = () => {
      this.opts.onStatus("closed");
      this.socket = null;
      if (!this.closed) {
        this.timer = setTimeout(() => this.open(),
                                this.opts.reconnectDelayMs ?? 500);
      }
    };
  }

  get isConnected(): boolean {
    return this.socket !== null;
  }

  sendEnvelope(env: Envelope): boolean {
    if (this.socket === null) return false;
    this.socket.send(JSON.stringify(env));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}
