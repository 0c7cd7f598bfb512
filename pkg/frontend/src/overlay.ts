/**
 * Detection overlay compositing.
 *
 * Boxes arrive in the rig's pixel coordinate space (announced in hello) and
 * are scaled onto whatever resolution the live frame uses. Drawing goes
 * through a minimal 2D-context interface so tests can record calls instead
 * of rasterizing.
 */

import { DetectionItem } from "./protocol.js";

export interface Draw2D {
  strokeStyle: string | unknown;
  fillStyle: string | unknown;
  lineWidth: number;
  font: string;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface OverlayView {
  frameWidth: number;
  frameHeight: number;
  coordWidth: number;
  coordHeight: number;
}

export function detectionLabel(det: DetectionItem): string {
  return `${det.label} at ${det.range_m.toFixed(1)} m (${(det.confidence * 100).toFixed(0)}%)`;
}

export function renderOverlay(ctx: Draw2D, view: OverlayView,
                              detections: DetectionItem[],
                              stale = false): void {
  const sx = view.frameWidth / view.coordWidth;
  const sy = view.frameHeight / view.coordHeight;
  ctx.lineWidth = 2;
  ctx.font = "12px monospace";
  for (const det of detections) {
    const [x0, y0, x1, y1] = det.box;
    const color = stale ? "#d9a441" : "#37d67a";
    ctx.strokeStyle = color;
    ctx.strokeRect(x0 * sx, y0 * sy, (x1 - x0) * sx, (y1 - y0) * sy);
    ctx.fillStyle = color;
    ctx.fillText(detectionLabel(det), x0 * sx, Math.max(y0 * sy - 4, 10));
  }
  if (stale && detections.length > 0) {
    ctx.fillStyle = "#d9a441";
    ctx.fillText("detections lag frame", 6, view.frameHeight - 6);
  }
}
