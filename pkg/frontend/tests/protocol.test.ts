/**
 * Protocol conformance: every message the UI can emit validates against the
 * wire schema across a scripted session (connect, drive, load path, halt,
 * resume), and inbound parsing rejects malformed frames.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { KeyTeleop } from "../src/keys.js";
import { Outbound, parseServerMessage, Plan } from "../src/protocol.js";
import { applyServerMessage, initialState, UiState } from "../src/state.js";
import { assertValid, HELLO, resetServerSeq, serverMsg } from "./helpers.js";

describe("scripted session conformance", () => {
  beforeEach(resetServerSeq);

  it("emits only schema-valid messages through connect/drive/load/halt/resume", () => {
    let state: UiState = initialState();
    const sent: unknown[] = [];
    let clock = 0;
    const outbound = new Outbound(() => clock);
    const teleop = new KeyTeleop({
      periodMs: () => 100,
      send: (key) => {
        const env = outbound.cmd(key);
        assertValid(env);
        sent.push(env);
      },
      isConnected: () => true,
      isHalted: () => state.halted,
      now: () => clock,
    });

    // connect
    state = applyServerMessage(state, serverMsg("hello", HELLO));

    // drive: hold w across several control periods, then switch to a
    for (let i = 0; i < 5; i++) {
      if (i === 0) teleop.keyDown("w");
      clock += 100;
      teleop.tick();
    }
    teleop.keyDown("a");
    clock += 100;
    teleop.tick();
    teleop.keyUp("a");
    teleop.keyUp("w");
    clock += 100;
    teleop.tick();

    // load a path (inline plan)
    const plan: Plan = {
      name: "lab-loop",
      steps: [{ duration_s: 2.0, left: 1, right: 1 },
              { duration_s: 1.0, left: -1, right: 1 }],
    };
    const loadMsg = outbound.pathLoadInline(plan);
    assertValid(loadMsg);
    sent.push(loadMsg);
    const byName = outbound.pathLoadByName("lab-loop");
    assertValid(byName);
    sent.push(byName);

    // halt arrives; movement keys now produce nothing
    state = applyServerMessage(
      state, serverMsg("halt_event", { reason: "obstacle at 0.4 m", t: 3.2 }));
    expect(state.halted).toBe(true);
    const sentBeforeHalted = sent.length;
    teleop.keyDown("w");
    clock += 200;
    teleop.tick();
    expect(sent.length).toBe(sentBeforeHalted);

    // resume
    const resumeMsg = outbound.resume();
    assertValid(resumeMsg);
    sent.push(resumeMsg);
    state = applyServerMessage(
      state, serverMsg("pose", { x: 0, y: 0, heading: 0, halted: false,
                                 halt_reason: null }));
    expect(state.halted).toBe(false);

    // envelope discipline: strictly increasing seq, every message valid
    const seqs = sent.map((m) => (m as { seq: number }).seq);
    for (let i = 1; i < seqs.length; i++) {
      expect(seqs[i]).toBeGreaterThan(seqs[i - 1]);
    }
    expect(sent.length).toBeGreaterThanOrEqual(8);
    for (const m of sent) assertValid(m);
  });

  it("cmd payloads are restricted to the drive keys", () => {
    const outbound = new Outbound(() => 0);
    for (const key of ["w", "a", "s", "d", "space"] as const) {
      assertValid(outbound.cmd(key));
    }
    const bogus = { type: "cmd", seq: 1, ts: 0, payload: { key: "q" } };
    expect(() => assertValid(bogus)).toThrow();
  });

  it("rejects malformed inbound frames and accepts valid ones", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('{"type":"pose"}')).toBeNull();
    expect(parseServerMessage('"string"')).toBeNull();
    const ok = parseServerMessage(JSON.stringify(
      serverMsg("pose", { x: 1, y: 2, heading: 0, halted: false })));
    expect(ok?.type).toBe("pose");
  });

  it("server fixture messages also satisfy the schema", () => {
    // the fixtures this suite replays must themselves be honest
    assertValid(serverMsg("hello", HELLO));
    assertValid(serverMsg("frame", { png_base64: "abc", width: 4, height: 4 }));
    assertValid(serverMsg("detections", {
      items: [{ box: [1, 2, 3, 4], confidence: 0.8, range_m: 0.5,
                label: "obstacle", ts: 1.0 }] }));
    assertValid(serverMsg("depth", { png_base64: "abc", width: 4, height: 4,
                                     min_m: 0.2, max_m: 4.5, capture_ts: 3.0 }));
    assertValid(serverMsg("snapshot_meta", { seq: 12, depth_present: true,
                                             depth_staleness_s: 8.0 }));
    assertValid(serverMsg("telemetry", { ts: 1, cpu_load: 0.4, memory_mb: 900,
                                         temp_c: 44.0 }));
    assertValid(serverMsg("halt_event", { reason: "x", t: 2.0 }));
    assertValid(serverMsg("error", { code: "not_halted", message: "no" }));
  });
});
