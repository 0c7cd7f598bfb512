import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import Ajv from "ajv";

import { Envelope } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));

export const WIRE_SCHEMA = JSON.parse(readFileSync(
  join(here, "..", "..", "protocol", "wire-schema.json"), "utf-8"));

const ajv = new Ajv({ strict: false });
export const validateWire = ajv.compile(WIRE_SCHEMA);

export function assertValid(msg: unknown): void {
  if (!validateWire(msg)) {
    throw new Error(`message violates wire schema: ${JSON.stringify(msg)}\n` +
      JSON.stringify(validateWire.errors, null, 2));
  }
}

let serverSeq = 0;

export function serverMsg(type: string, payload: Record<string, unknown>,
                          ts = 0): Envelope {
  serverSeq += 1;
  return { type, seq: serverSeq, ts, payload };
}

export function resetServerSeq(): void {
  serverSeq = 0;
}

export const HELLO = {
  server: "deskrover",
  version: "0.1.0",
  coord_width: 500,
  coord_height: 500,
  detection_rate: 10,
  depth_rate: 0.1,
  depth_latency: 7,
  stop_range_m: 0.5,
  staleness_bound_s: 17,
};
