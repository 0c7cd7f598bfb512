/**
 * Wire protocol envelopes and payload types.
 *
 * Every message on the socket is {type, seq, ts, payload}; seq increases
 * strictly per direction and ts is seconds on the sender's clock. The
 * authoritative schema lives in protocol/wire-schema.json at the repo root;
 * the conformance tests validate everything this module emits against it.
 */

export type ServerMessageType =
  | "hello" | "frame" | "detections" | "depth" | "snapshot_meta"
  | "telemetry" | "pose" | "halt_event" | "error";

export type ClientMessageType = "cmd" | "path_load" | "resume";

export interface Envelope<T = Record<string, unknown>> {
  type: string;
  seq: number;
  ts: number;
  payload: T;
}

export interface HelloPayload {
  server: string;
  version?: string;
  coord_width: number;
  coord_height: number;
  detection_rate: number;
  depth_rate?: number;
  depth_latency?: number;
  stop_range_m?: number;
  staleness_bound_s?: number;
}

export interface FramePayload {
  png_base64: string;
  width: number;
  height: number;
}

export interface DetectionItem {
  box: [number, number, number, number];
  confidence: number;
  range_m: number;
  label: string;
  ts: number;
}

export interface DetectionsPayload {
  items: DetectionItem[];
}

export interface DepthPayload {
  png_base64: string;
  width: number;
  height: number;
  min_m: number;
  max_m: number;
  capture_ts: number;
}

export interface SnapshotMetaPayload {
  seq: number;
  detections_ts?: number;
  depth_present: boolean;
  depth_staleness_s?: number | null;
}

export interface TelemetryPayload {
  ts: number;
  cpu_load: number;
  memory_mb: number;
  temp_c: number;
}

export interface PosePayload {
  x: number;
  y: number;
  heading: number;
  halted: boolean;
  halt_reason?: string | null;
}

export interface HaltEventPayload {
  reason: string;
  t: number;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export type DriveKey = "w" | "a" | "s" | "d" | "space";

export interface PlanStep {
  duration_s: number;
  left: -1 | 0 | 1;
  right: -1 | 0 | 1;
}

export interface Plan {
  name?: string;
  steps: PlanStep[];
}

/** Builds outbound envelopes with a strictly increasing seq. */
export class Outbound {
  private seq = 0;
  private readonly t0: number;

  constructor(private readonly now: () => number = () => Date.now()) {
    this.t0 = this.now();
  }

  envelope(type: ClientMessageType, payload: Record<string, unknown>): Envelope {
    this.seq += 1;
    return { type, seq: this.seq, ts: (this.now() - this.t0) / 1000, payload };
  }

  cmd(key: DriveKey): Envelope {
    return this.envelope("cmd", { key });
  }

  pathLoadByName(name: string): Envelope {
    return this.envelope("path_load", { name });
  }

  pathLoadInline(plan: Plan): Envelope {
    return this.envelope("path_load", { plan });
  }

  resume(): Envelope {
    return this.envelope("resume", {});
  }
}

/** Parse an incoming frame; returns null for anything malformed. */
export function parseServerMessage(raw: string): Envelope | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (typeof msg.type !== "string" || typeof msg.seq !== "number"
      || typeof msg.ts !== "number" || typeof msg.payload !== "object"
      || msg.payload === null) {
    return null;
  }
  return msg as unknown as Envelope;
}
