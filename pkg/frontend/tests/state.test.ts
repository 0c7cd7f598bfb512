import { beforeEach, describe, expect, it } from "vitest";

import {
  applyServerMessage,
  detectionsAreStale,
  initialState,
  setConnection,
  UiState,
} from "../src/state.js";
import { HELLO, resetServerSeq, serverMsg } from "./helpers.js";

describe("state reducer", () => {
  beforeEach(resetServerSeq);

  it("stores the latest value per channel", () => {
    let s: UiState = initialState();
    s = applyServerMessage(s, serverMsg("hello", HELLO));
    s = applyServerMessage(s, serverMsg("telemetry",
      { ts: 1, cpu_load: 0.5, memory_mb: 800, temp_c: 42 }));
    s = applyServerMessage(s, serverMsg("telemetry",
      { ts: 2, cpu_load: 0.6, memory_mb: 810, temp_c: 43 }));
    expect(s.hello?.coord_width).toBe(500);
    expect(s.telemetry?.payload.temp_c).toBe(43);
    expect(s.lastServerSeq).toBe(3);
  });

  it("halt banner is shown from halt_event until a resumed pose", () => {
    let s: UiState = initialState();
    s = applyServerMessage(s, serverMsg("halt_event", { reason: "rock", t: 5 }));
    expect(s.halted).toBe(true);
    expect(s.lastHalt?.reason).toBe("rock");
    // poses while still halted keep the banner
    s = applyServerMessage(s, serverMsg("pose",
      { x: 1, y: 0, heading: 0, halted: true, halt_reason: "rock" }));
    expect(s.halted).toBe(true);
    // the resume acknowledgment clears it
    s = applyServerMessage(s, serverMsg("pose",
      { x: 1, y: 0, heading: 0, halted: false, halt_reason: null }));
    expect(s.halted).toBe(false);
    expect(s.lastHalt).toBeNull();
  });

  it("a halted pose alone also raises the banner", () => {
    let s: UiState = initialState();
    s = applyServerMessage(s, serverMsg("pose",
      { x: 0, y: 0, heading: 0, halted: true, halt_reason: "x" }));
    expect(s.halted).toBe(true);
  });

  it("detections staleness compares message seq against the frame", () => {
    let s: UiState = initialState();
    s = applyServerMessage(s, serverMsg("detections", { items: [] }));
    s = applyServerMessage(s, serverMsg("frame",
      { png_base64: "x", width: 2, height: 2 }));
    expect(detectionsAreStale(s)).toBe(true);
    s = applyServerMessage(s, serverMsg("detections", { items: [] }));
    expect(detectionsAreStale(s)).toBe(false);
  });

  it("errors are surfaced without disturbing channel state", () => {
    let s: UiState = initialState();
    s = applyServerMessage(s, serverMsg("pose",
      { x: 1, y: 2, heading: 0, halted: false }));
    s = applyServerMessage(s, serverMsg("error",
      { code: "not_halted", message: "rover is not halted" }));
    expect(s.lastError?.code).toBe("not_halted");
    expect(s.pose?.payload.x).toBe(1);
  });

  it("connection status transitions", () => {
    let s = initialState();
    expect(s.connection).toBe("connecting");
    s = setConnection(s, "open");
    expect(s.connection).toBe("open");
    s = setConnection(s, "closed");
    expect(s.connection).toBe("closed");
  });

  it("reducer is pure: inputs are not mutated", () => {
    const s0 = initialState();
    const frozen = Object.freeze(s0);
    const s1 = applyServerMessage(frozen, serverMsg("hello", HELLO));
    expect(s1).not.toBe(s0);
    expect(s0.hello).toBeNull();
  });
});
