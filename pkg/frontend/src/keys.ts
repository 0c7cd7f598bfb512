/**
 * Keyboard teleoperation.
 *
 * Discrete motor levels mean only one command is meaningful at a time, so
 * the latest pressed movement key wins outright (no chorded driving).
 * Commands are rate-limited to the server's control period: holding a key
 * re-sends once per period (ignoring autorepeat), releasing every key sends
 * a single stop. While the rover is halted, movement keys emit nothing;
 * only an explicit resume goes out. When disconnected the latest intent is
 * buffered and dropped if the link stays down longer than a second.
 */

import { DriveKey } from "./protocol.js";

const MOVEMENT_KEYS = new Set(["w", "a", "s", "d"]);
export const DISCONNECT_BUFFER_MS = 1000;

export interface TeleopHooks {
  periodMs: () => number;
  send: (key: DriveKey) => void;
  isConnected: () => boolean;
  isHalted: () => boolean;
  now: () => number;
}

export class KeyTeleop {
  private held: string[] = [];          // movement keys, newest last
  private stopPending = false;          // keys released, stop not yet sent
  private lastSentAt = -Infinity;
  private buffered: { key: DriveKey; at: number } | null = null;

  constructor(private readonly hooks: TeleopHooks) {}

  keyDown(key: string): void {
    const k = key.toLowerCase();
    if (!MOVEMENT_KEYS.has(k)) return;
    const top = this.held[this.held.length - 1];
    this.held = this.held.filter((h) => h !== k);
    this.held.push(k);
    this.stopPending = false;
    if (top !== k) this.maybeSend(); // a repeat of the top key is autorepeat
  }

  keyUp(key: string): void {
    const k = key.toLowerCase();
    if (!MOVEMENT_KEYS.has(k)) return;
    const before = this.held.length;
    this.held = this.held.filter((h) => h !== k);
    if (before > 0 && this.held.length === 0) {
      this.stopPending = true;
      this.maybeSend();
    } else if (this.held.length > 0 && before !== this.held.length) {
      this.maybeSend(); // surviving key takes over
    }
  }

  /** Call on an interval at most the control period. */
  tick(): void {
    this.flushBuffer();
    if (this.desired() !== null) this.maybeSend();
  }

  releaseAll(): void {
    if (this.held.length > 0) {
      this.held = [];
      this.stopPending = true;
      this.maybeSend();
    }
  }

  private desired(): DriveKey | null {
    if (this.held.length > 0) {
      return this.held[this.held.length - 1] as DriveKey;
    }
    return this.stopPending ? "space" : null;
  }

  private maybeSend(): void {
    const key = this.desired();
    if (key === null) return;
    if (this.hooks.isHalted()) {
      // halt latch: movement produces nothing; drop the stale stop too
      this.stopPending = false;
      return;
    }
    if (!this.hooks.isConnected()) {
      this.buffered = { key, at: this.hooks.now() };
      if (key === "space") this.stopPending = false;
      return;
    }
    const now = this.hooks.now();
    if (now - this.lastSentAt < this.hooks.periodMs()) return;
    this.lastSentAt = now;
    this.hooks.send(key);
    if (key === "space") this.stopPending = false;
  }

  private flushBuffer(): void {
    if (this.buffered === null) return;
    if (this.hooks.now() - this.buffered.at > DISCONNECT_BUFFER_MS) {
      this.buffered = null;
      return;
    }
    if (this.hooks.isConnected() && !this.hooks.isHalted()) {
      const { key } = this.buffered;
      this.buffered = null;
      const now = this.hooks.now();
      if (now - this.lastSentAt >= this.hooks.periodMs()) {
        this.lastSentAt = now;
        this.hooks.send(key);
      }
    }
  }

  get bufferedKey(): DriveKey | null {
    return this.buffered?.key ?? null;
  }
}
