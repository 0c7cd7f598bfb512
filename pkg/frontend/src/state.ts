/**
 * UI state: the latest value of every channel plus the halt latch.
 *
 * Rendering reads this store on its own schedule; message arrival only
 * replaces latest-value fields, so a slow network can never block drawing.
 * The halted banner tracks the last halt_event and clears only when a pose
 * arrives with halted=false (the server acknowledging a resume).
 */

import {
  DepthPayload,
  DetectionsPayload,
  Envelope,
  ErrorPayload,
  FramePayload,
  HaltEventPayload,
  HelloPayload,
  PosePayload,
  SnapshotMetaPayload,
  TelemetryPayload,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Stamped<T> {
  payload: T;
  seq: number;
  ts: number;
}

export interface UiState {
  connection: ConnectionStatus;
  hello: HelloPayload | null;
  frame: Stamped<FramePayload> | null;
  detections: Stamped<DetectionsPayload> | null;
  depth: Stamped<DepthPayload> | null;
  snapshot: Stamped<SnapshotMetaPayload> | null;
  pose: Stamped<PosePayload> | null;
  telemetry: Stamped<TelemetryPayload> | null;
  halted: boolean;
  lastHalt: HaltEventPayload | null;
  lastError: ErrorPayload | null;
  lastServerSeq: number;
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    hello: null,
    frame: null,
    detections: null,
    depth: null,
    snapshot: null,
    pose: null,
    telemetry: null,
    halted: false,
    lastHalt: null,
    lastError: null,
    lastServerSeq: 0,
  };
}

function stamp<T>(msg: Envelope): Stamped<T> {
  return { payload: msg.payload as T, seq: msg.seq, ts: msg.ts };
}

export function applyServerMessage(state: UiState, msg: Envelope): UiState {
  const next: UiState = { ...state, lastServerSeq: msg.seq };
  switch (msg.type) {
    case "hello":
      next.hello = msg.payload as unknown as HelloPayload;
      break;
    case "frame":
      next.frame = stamp(msg);
      break;
    case "detections":
      next.detections = stamp(msg);
      break;
    case "depth":
      next.depth = stamp(msg);
      break;
    case "snapshot_meta":
      next.snapshot = stamp(msg);
      break;
    case "telemetry":
      next.telemetry = stamp(msg);
      break;
    case "pose": {
      const pose = msg.payload as unknown as PosePayload;
      next.pose = stamp(msg);
      next.halted = pose.halted;
      if (!pose.halted) next.lastHalt = null; // resume acknowledged
      break;
    }
    case "halt_event":
      next.halted = true;
      next.lastHalt = msg.payload as unknown as HaltEventPayload;
      break;
    case "error":
      next.lastError = msg.payload as unknown as ErrorPayload;
      break;
    default:
      break;
  }
  return next;
}

export function setConnection(state: UiState, status: ConnectionStatus): UiState {
  return { ...state, connection: status };
}

/** Detections lagging the frame they would be drawn over. */
export function detectionsAreStale(state: UiState): boolean {
  if (!state.detections || !state.frame) return false;
  return state.detections.seq < state.frame.seq;
}
