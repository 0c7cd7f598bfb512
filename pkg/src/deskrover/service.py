"""Operator-facing service: a WebSocket wire protocol around the live rover.

One authoritative control loop mutates the rover; clients interact only
through messages.  The fast perception channel drives control ticks (one
safety decision per fresh snapshot); teleop commands additionally trigger an
immediate off-schedule tick so a keypress round-trips in milliseconds
instead of waiting out the control period.  Frame, depth-preview, telemetry
and snapshot-meta pushes are per-client and drop-capable: a slow client
loses frames, never commands, and never stalls the loop.

Wire format: JSON envelopes {type, seq, ts, payload} (see
protocol/wire-schema.json); seq increases strictly per direction per
connection.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import threading
import time
from collections import deque
from dataclasses import replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from PIL import Image

from deskrover import __version__
from deskrover.config import AppConfig
from deskrover.pipeline import RealTimePipeline
from deskrover.rover import (
    STOP,
    PathPlan,
    RoverState,
    map_key,
    safety_gate,
    step,
)
from deskrover.sim import SimWorld

logger = logging.getLogger(__name__)

CMD_TIMEOUT_S = 1.0
MAX_CRITICAL_BACKLOG = 512
LOSSY_BACKLOG = 8


def colorize_depth(values: np.ndarray, valid: np.ndarray):
    """Map a metric depth raster to an RGB preview (near = warm, far = cool).

    Returns (rgb uint8 image, min_m, max_m); invalid pixels are black.
    """
    if valid.any():
        lo = float(values[valid].min())
        hi = float(values[valid].max())
    else:
        lo, hi = 0.0, 1.0
    span = hi - lo if hi > lo else 1.0
    t = np.clip((values - lo) / span, 0.0, 1.0)
    # warm-to-cool gradient stops
    stops = np.array([
        [255, 60, 40], [255, 170, 40], [230, 230, 80],
        [60, 200, 120], [40, 90, 235],
    ], dtype=np.float64)
    pos = t * (len(stops) - 1)
    i0 = np.clip(pos.astype(np.int64), 0, len(stops) - 2)
    frac = (pos - i0)[..., None]
    rgb = stops[i0] * (1.0 - frac) + stops[i0 + 1] * frac
    rgb[~valid] = 0.0
    return rgb.astype(np.uint8), lo, hi


def png_base64(image: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(image).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class ClientSession:
    """Per-client outbound message buffers.

    ``critical`` (poses, halt events, errors, hello) is never dropped;
    ``lossy`` (frames, depth previews, telemetry, snapshot meta) keeps only
    the most recent few entries.  Sequence numbers are assigned at send time
    so they increase strictly per connection regardless of queue.
    """

    def __init__(self, client_id: int):
        self.client_id = client_id
        self._cond = threading.Condition()
        self._critical: deque = deque()
        self._lossy: deque = deque(maxlen=LOSSY_BACKLOG)
        self._seq = 0
        self.closed = False
        self.last_client_seq: int | None = None

    def push(self, msg_type: str, ts: float, payload: dict,
             lossy: bool = False) -> None:
        with self._cond:
            if self.closed:
                return
            if lossy:
                self._lossy.append((msg_type, ts, payload))  # maxlen drops oldest
            else:
                if len(self._critical) > MAX_CRITICAL_BACKLOG:
                    self.closed = True
                    logger.warning("client %d stalled; closing", self.client_id)
                else:
                    self._critical.append((msg_type, ts, payload))
            self._cond.notify()

    def next_message(self, timeout: float = 0.25) -> str | None:
        """Next outbound message as JSON text, or None on timeout/close."""
        with self._cond:
            if not self._critical and not self._lossy:
                self._cond.wait(timeout)
            if self.closed and not self._critical and not self._lossy:
                return None
            if self._critical:
                msg_type, ts, payload = self._critical.popleft()
            elif self._lossy:
                msg_type, ts, payload = self._lossy.popleft()
            else:
                return None
            self._seq += 1
            return json.dumps({"type": msg_type, "seq": self._seq,
                               "ts": ts, "payload": payload})

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()


class RoverService:
    """The live control loop plus client fan-out."""

    def __init__(self, config: AppConfig):
        if config.schedule.clock != "real":
            config = replace(config, schedule=replace(config.schedule, clock="real"))
        self.config = config
        self.world = SimWorld(config)
        self._lock = threading.RLock()
        self._clients: dict[int, ClientSession] = {}
        self._next_client_id = 1
        self._active_cmd = STOP
        self._cmd_deadline = 0.0
        self._plan: PathPlan | None = None
        self._plan_elapsed = 0.0
        self._plans: dict[str, PathPlan] = {}
        if config.plan is not None:
            self._plans[config.plan.name] = config.plan
        self._last_step = 0.0
        self._last_depth_ts: float | None = None
        self._stop = threading.Event()
        self._pipeline = RealTimePipeline(
            config.schedule, self.world.fast_detections, self.world.depth_job,
            snapshot_sink=self._on_snapshot)
        self._aux_threads: list[threading.Thread] = []
        from deskrover.evaluation import TelemetrySimulator
        self._telemetry = TelemetrySimulator(seed=config.scene.terrain.seed)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._pipeline.start()
        self._last_step = self.now()
        self._aux_threads = [
            threading.Thread(target=self._frame_loop, daemon=True, name="frames"),
            threading.Thread(target=self._telemetry_loop, daemon=True,
                             name="telemetry"),
        ]
        for t in self._aux_threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        self._pipeline.stop()
        for t in self._aux_threads:
            t.join(timeout=2.0)
        for session in list(self._clients.values()):
            session.close()

    def now(self) -> float:
        return self._pipeline.now()

    # -- clients -----------------------------------------------------------

    def register_client(self) -> ClientSession:
        with self._lock:
            session = ClientSession(self._next_client_id)
            self._next_client_id += 1
            self._clients[session.client_id] = session
        intr = self.config.rig.intrinsics
        sched = self.config.schedule
        session.push("hello", self.now(), {
            "server": "deskrover",
            "version": __version__,
            "coord_width": intr.width_px,
            "coord_height": intr.height_px,
            "detection_rate": sched.detection_rate,
            "depth_rate": sched.depth_rate,
            "depth_latency": sched.depth_latency,
            "stop_range_m": self.config.safety.stop_range,
            "staleness_bound_s": sched.depth_period + sched.depth_latency,
        })
        return session

    def unregister_client(self, session: ClientSession) -> None:
        session.close()
        with self._lock:
            self._clients.pop(session.client_id, None)

    def _broadcast(self, msg_type: str, payload: dict, lossy: bool = False) -> None:
        ts = self.now()
        with self._lock:
            sessions = list(self._clients.values())
        for session in sessions:
            session.push(msg_type, ts, payload, lossy=lossy)

    # -- control -----------------------------------------------------------

    def _current_command(self, now: float):
        """(command, advances_plan) under teleop-overrides-plan semantics."""
        if self._active_cmd != STOP and now < self._cmd_deadline:
            return self._active_cmd, False
        if self._plan is not None:
            if self._plan_elapsed >= self._plan.total_duration:
                self._plan = None
                return STOP, False
            return self._plan.command_at(self._plan_elapsed), True
        return STOP, False

    def _control_tick(self, snapshot, now: float | None = None) -> None:
        with self._lock:
            t = self.now() if now is None else now
            dt = t - self._last_step
            if dt <= 1e-4:
                return
            dt = min(dt, 2.0 * self.config.schedule.detection_period)
            self._last_step = t
            state = self.world.state
            reason = safety_gate(snapshot, self.config.safety,
                                 self.config.rig.intrinsics.width_px)
            if reason is not None and not state.halted:
                state = state.halt(reason)
                self.world.state = state
                self._plan = None
                self._active_cmd = STOP
                self._broadcast("halt_event", {"reason": reason, "t": t})
                self._push_pose(state)
                return
            if not state.halted:
                cmd, advances_plan = self._current_command(t)
                if advances_plan:
                    self._plan_elapsed += dt
                state = step(state, cmd, dt, self.config.rover)
                self.world.state = state
            self._push_pose(state)

    def _on_snapshot(self, snapshot) -> None:
        self._control_tick(snapshot)
        self._broadcast("detections", {
            "items": [d.to_wire() for d in snapshot.detections]}, lossy=True)
        self._broadcast("snapshot_meta", {
            "seq": snapshot.seq,
            "detections_ts": snapshot.detections_timestamp,
            "depth_present": snapshot.has_depth,
            "depth_staleness_s": snapshot.depth_staleness,
        }, lossy=True)
        if snapshot.has_depth and snapshot.depth.capture_timestamp != self._last_depth_ts:
            self._last_depth_ts = snapshot.depth.capture_timestamp
            self._push_depth_preview(snapshot.depth)

    def _push_pose(self, state: RoverState) -> None:
        self._broadcast("pose", {
            "x": state.x, "y": state.y, "heading": state.heading,
            "halted": state.halted, "halt_reason": state.halt_reason})

    def _push_depth_preview(self, result) -> None:
        rgb, lo, hi = colorize_depth(result.depth.values, result.depth.valid)
        self._broadcast("depth", {
            "png_base64": png_base64(rgb),
            "width": rgb.shape[1], "height": rgb.shape[0],
            "min_m": lo, "max_m": hi,
            "capture_ts": result.capture_timestamp,
        }, lossy=True)

    def _frame_loop(self) -> None:
        period = 1.0 / self.config.server.frame_rate_limit
        while not self._stop.is_set():
            started = self.now()
            try:
                frame = self.world.render(self.config.server.live_render_px,
                                          timestamp=started)
                self._broadcast("frame", {
                    "png_base64": png_base64(frame.left),
                    "width": frame.left.shape[1],
                    "height": frame.left.shape[0],
                }, lossy=True)
            except Exception:
                logger.exception("live frame render failed")
            elapsed = self.now() - started
            if self._stop.wait(max(period - elapsed, 0.0)):
                return

    def _telemetry_loop(self) -> None:
        while not self._stop.is_set():
            sample = self._telemetry.sample(self.now())
            self._broadcast("telemetry", sample.to_wire(), lossy=True)
            if self._stop.wait(self.config.server.telemetry_period):
                return

    # -- client messages ----------------------------------------------------

    def handle_client_message(self, session: ClientSession, raw: str) -> None:
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            self._error(session, "malformed", "message is not valid JSON")
            return
        if not isinstance(msg, dict) or not {"type", "seq", "ts", "payload"} <= set(msg):
            self._error(session, "malformed",
                        "message must be {type, seq, ts, payload}")
            return
        seq = msg["seq"]
        if (not isinstance(seq, int)
                or (session.last_client_seq is not None
                    and seq <= session.last_client_seq)):
            self._error(session, "bad_seq",
                        f"client seq must increase strictly (got {seq!r})")
            return
        session.last_client_seq = seq
        handler = {
            "cmd": self._handle_cmd,
            "path_load": self._handle_path_load,
            "resume": self._handle_resume,
        }.get(msg["type"])
        if handler is None:
            self._error(session, "bad_type",
                        f"client cannot send type {msg['type']!r}")
            return
        payload = msg["payload"] if isinstance(msg["payload"], dict) else {}
        handler(session, payload)

    def _error(self, session: ClientSession, code: str, message: str) -> None:
        session.push("error", self.now(), {"code": code, "message": message})

    def _handle_cmd(self, session: ClientSession, payload: dict) -> None:
        key = str(payload.get("key", ""))
        cmd = map_key(key) if key else STOP
        with self._lock:
            now = self.now()
            self._plan = None  # manual override cancels any plan
            self._active_cmd = cmd
            self._cmd_deadline = now + CMD_TIMEOUT_S
        # apply immediately so the pose ack does not wait out a full period
        self._control_tick(self._pipeline.latest_snapshot())
        if self.world.state.halted and not cmd.is_stop:
            self._error(session, "halted",
                        "rover is halted; send resume to release the latch")

    def _handle_path_load(self, session: ClientSession, payload: dict) -> None:
        plan = None
        if "plan" in payload:
            try:
                plan = PathPlan.from_dict(payload["plan"])
            except (KeyError, TypeError, ValueError) as exc:
                self._error(session, "bad_plan", f"invalid inline plan: {exc}")
                return
        elif "name" in payload:
            plan = self._plans.get(str(payload["name"]))
            if plan is None:
                self._error(session, "unknown_path",
                            f"no plan named {payload['name']!r}; "
                            f"available: {sorted(self._plans)}")
                return
        else:
            self._error(session, "bad_plan", "path_load needs 'name' or 'plan'")
            return
        with self._lock:
            self._plans.setdefault(plan.name, plan)
            self._plan = plan
            self._plan_elapsed = 0.0
            self._active_cmd = STOP

    def _handle_resume(self, session: ClientSession, payload: dict) -> None:
        with self._lock:
            state = self.world.state
            if not state.halted:
                self._error(session, "not_halted", "rover is not halted")
                return
            self.world.state = state.resume()
            self._active_cmd = STOP
            self._plan = None
        self._push_pose(self.world.state)


def build_app(service: RoverService):
    """FastAPI app exposing the wire protocol at /ws (plus the UI if built)."""
    import asyncio
    import contextlib
    from pathlib import Path

    @contextlib.asynccontextmanager
    async def lifespan(app):
        service.start()
        try:
            yield
        finally:
            service.stop()

    app = FastAPI(title="deskrover teleop", lifespan=lifespan)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "clients": len(service._clients)}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = service.register_client()
        loop = asyncio.get_running_loop()

        async def sender():
            while not session.closed:
                text = await loop.run_in_executor(None, session.next_message)
                if text is not None:
                    await websocket.send_text(text)

        sender_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await websocket.receive_text()
                service.handle_client_message(session, raw)
        except WebSocketDisconnect:
            pass
        finally:
            service.unregister_client(session)
            sender_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender_task

    ui_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dist.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app


def serve(config: AppConfig) -> None:
    """Run the teleop service until interrupted."""
    import uvicorn

    app = build_app(RoverService(config))
    uvicorn.run(app, host=config.server.host, port=config.server.port,
                log_level="info")
