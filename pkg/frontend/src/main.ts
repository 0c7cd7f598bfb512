/**
 * Console wiring: socket -> state store -> render loop, keyboard -> teleop.
 *
 * Rendering runs on requestAnimationFrame over latest-value state and never
 * blocks on the network. The server address comes from the page's host or
 * ?host=...&port=... query overrides.
 */

import { depthView } from "./depthview.js";
import { KeyTeleop } from "./keys.js";
import { TeleopClient } from "./net.js";
import { Envelope, Plan } from "./protocol.js";
import {
  applyServerMessage,
  detectionsAreStale,
  initialState,
  setConnection,
  UiState,
} from "./state.js";
import { renderOverlay } from "./overlay.js";

let state: UiState = initialState();

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? window.location.port ?? "8710";
  return `ws://${host}:${port}/ws`;
}

const el = {
  status: document.getElementById("status") as HTMLSpanElement,
  clock: document.getElementById("clock") as HTMLSpanElement,
  telemetry: document.getElementById("telemetry") as HTMLSpanElement,
  pose: document.getElementById("pose") as HTMLSpanElement,
  banner: document.getElementById("halt-banner") as HTMLDivElement,
  bannerReason: document.getElementById("halt-reason") as HTMLSpanElement,
  resume: document.getElementById("resume") as HTMLButtonElement,
  frame: document.getElementById("frame") as HTMLCanvasElement,
  depth: document.getElementById("depth") as HTMLCanvasElement,
  depthLegend: document.getElementById("depth-legend") as HTMLSpanElement,
  planFile: document.getElementById("plan-file") as HTMLInputElement,
  planLoad: document.getElementById("plan-load") as HTMLButtonElement,
  errors: document.getElementById("errors") as HTMLSpanElement,
};

const frameImage = new Image();
let framePngSeq = -1;
const depthImage = new Image();
let depthPngSeq = -1;

const client = new TeleopClient({
  url: wsUrl(),
  onMessage: (msg: Envelope) => { state = applyServerMessage(state, msg); },
  onStatus: (status) => { state = setConnection(state, status); },
});

const teleop = new KeyTeleop({
  periodMs: () => 1000 / (state.hello?.detection_rate ?? 10),
  send: (key) => client.sendEnvelope(client.outbound.cmd(key)),
  isConnected: () => client.isConnected && state.connection === "open",
  isHalted: () => state.halted,
  now: () => performance.now(),
});

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return; // KeyTeleop owns the resend cadence
  teleop.keyDown(ev.key);
});
window.addEventListener("keyup", (ev) => teleop.keyUp(ev.key));
window.addEventListener("blur", () => teleop.releaseAll());
setInterval(() => teleop.tick(), 25);

el.resume.addEventListener("click", () => {
  client.sendEnvelope(client.outbound.resume());
});

el.planLoad.addEventListener("click", async () => {
  const file = el.planFile.files?.[0];
  if (!file) return;
  try {
    const plan = JSON.parse(await file.text()) as Plan;
    client.sendEnvelope(client.outbound.pathLoadInline(plan));
  } catch (err) {
    el.errors.textContent = `plan file: ${String(err)}`;
  }
});

function drawFrame(): void {
  const ctx = el.frame.getContext("2d");
  if (!ctx) return;
  if (state.frame && state.frame.seq !== framePngSeq) {
    framePngSeq = state.frame.seq;
    frameImage.src = `data:image/png;base64,${state.frame.payload.png_base64}`;
  }
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, el.frame.width, el.frame.height);
  if (frameImage.complete && frameImage.naturalWidth > 0) {
    ctx.drawImage(frameImage, 0, 0, el.frame.width, el.frame.height);
  }
  if (state.detections && state.hello) {
    renderOverlay(ctx, {
      frameWidth: el.frame.width,
      frameHeight: el.frame.height,
      coordWidth: state.hello.coord_width,
      coordHeight: state.hello.coord_height,
    }, state.detections.payload.items, detectionsAreStale(state));
  }
}

function drawDepth(): void {
  const ctx = el.depth.getContext("2d");
  if (!ctx) return;
  const view = depthView(state);
  el.depthLegend.textContent = view.legend;
  el.depthLegend.className = view.status;
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, el.depth.width, el.depth.height);
  if (state.depth) {
    if (state.depth.seq !== depthPngSeq) {
      depthPngSeq = state.depth.seq;
      depthImage.src = `data:image/png;base64,${state.depth.payload.png_base64}`;
    }
    if (depthImage.complete && depthImage.naturalWidth > 0) {
      ctx.globalAlpha = view.status === "stale" ? 0.45 : 1.0;
      ctx.drawImage(depthImage, 0, 0, el.depth.width, el.depth.height);
      ctx.globalAlpha = 1.0;
    }
  } else {
    ctx.fillStyle = "#777";
    ctx.font = "14px monospace";
    ctx.fillText("awaiting depth", 12, el.depth.height / 2);
  }
}

function render(): void {
  el.status.textContent = state.connection;
  el.status.className = state.connection;
  el.clock.textContent = new Date().toLocaleTimeString();
  if (state.telemetry) {
    const t = state.telemetry.payload;
    el.telemetry.textContent =
      `${t.temp_c.toFixed(0)} C  cpu ${(t.cpu_load * 100).toFixed(0)}%  ` +
      `${t.memory_mb.toFixed(0)} MB`;
  }
  if (state.pose) {
    const p = state.pose.payload;
    el.pose.textContent =
      `x ${p.x.toFixed(2)}  y ${p.y.toFixed(2)}  hdg ${p.heading.toFixed(2)}`;
  }
  el.banner.style.display = state.halted ? "flex" : "none";
  if (state.lastHalt) el.bannerReason.textContent = state.lastHalt.reason;
  el.errors.textContent = state.lastError
    ? `${state.lastError.code}: ${state.lastError.message}` : "";
  drawFrame();
  drawDepth();
  requestAnimationFrame(render);
}

client.connect();
requestAnimationFrame(render);
