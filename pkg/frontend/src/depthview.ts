/**
 * Depth panel state: the color-mapped preview's legend and the staleness
 * readout. Delayed depth is the architecture's core trade-off, so its age
 * is always on screen; exceeding the advertised bound (cadence + latency)
 * flips the panel into a warning state.
 */

import { UiState } from "./state.js";

export type DepthViewStatus = "missing" | "fresh" | "stale";

export interface DepthView {
  status: DepthViewStatus;
  legend: string;
  stalenessS: number | null;
}

export const DEFAULT_STALENESS_BOUND_S = 17;

export function depthView(state: UiState): DepthView {
  if (!state.depth) {
    return { status: "missing", legend: "awaiting depth", stalenessS: null };
  }
  const bound = state.hello?.staleness_bound_s ?? DEFAULT_STALENESS_BOUND_S;
  const staleness = state.snapshot?.payload.depth_staleness_s ?? null;
  const range = `${state.depth.payload.min_m.toFixed(2)}-` +
    `${state.depth.payload.max_m.toFixed(2)} m`;
  if (staleness === null) {
    return { status: "fresh", legend: range, stalenessS: null };
  }
  const status: DepthViewStatus = staleness <= bound ? "fresh" : "stale";
  const suffix = status === "stale" ? " (stale)" : "";
  return {
    status,
    legend: `${range}, ${staleness.toFixed(1)} s old${suffix}`,
    stalenessS: staleness,
  };
}
