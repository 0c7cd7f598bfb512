"""Headless simulation: the world adapter and the full simulate workflow.

:class:`SimWorld` closes the loop between the rover's pose and the
perception channels: the fast channel raycasts obstacle surfaces only (the
ground plane is not an obstacle) into a metric depth probe for the detector,
while the slow channel raycasts the full scene and runs the monocular depth
backend on it.  Probes run at reduced resolution; detection boxes are
rescaled into rig pixel coordinates, the canonical detection space.

:func:`run_simulation` executes a path plan under the simulated clock with
safety gating and writes a deterministic session log (no wall-clock values
enter any logged artifact, so identical configs produce byte-identical
``events.jsonl``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from deskrover.config import AppConfig
from deskrover.detect import Detection, detect
from deskrover.evaluation import (
    NavReport,
    SessionWriter,
    TelemetrySimulator,
    nav_metrics,
)
from deskrover.geometry import CameraIntrinsics
from deskrover.monodepth import MonoDepthResult, estimate
from deskrover.pipeline import PerceptionLoop
from deskrover.rover import (
    ExecutionReport,
    PathPlan,
    RoverParams,
    RoverState,
    TrajectorySample,
    execute_path,
    step,
)
from deskrover.scene import CameraPose, probe_depth, render_stereo
from deskrover.stereo import DepthMap


class SimWorld:
    """Scene + rover pose adapted to the perception pipeline's channels."""

    def __init__(self, config: AppConfig, state: RoverState | None = None):
        self.config = config
        mount = config.mount
        self.state = state if state is not None else RoverState(
            x=mount.initial_x, y=mount.initial_y, heading=mount.initial_heading)
        intr = config.rig.intrinsics
        self.probe_intrinsics = CameraIntrinsics.from_fov(
            mount.probe_resolution, mount.probe_resolution,
            intr.fov_h_deg, intr.fov_v_deg)
        self.box_scale = intr.width_px / mount.probe_resolution
        ups = config.rig.units_per_meter
        self.fast_range_units = config.detector.near_threshold * ups * 1.6
        self.slow_range_units = config.monodepth.max_range * ups * 1.3

    def camera_pose(self, state: RoverState | None = None) -> CameraPose:
        s = state if state is not None else self.state
        terrain_h = float(self.config.scene.terrain.height_at(s.x, s.y))
        return CameraPose(
            position=np.array([s.x, s.y, terrain_h + self.config.mount.camera_height]),
            yaw=s.heading,
            pitch=math.radians(self.config.mount.camera_pitch_deg))

    def on_tick(self, t: float, state: RoverState, snapshot) -> None:
        self.state = state

    def fast_detections(self, t: float) -> list[Detection]:
        """Fast channel: obstacle-surface depth probe -> geometric detector."""
        ups = self.config.rig.units_per_meter
        depth_units, _ = probe_depth(
            self.config.scene, self.probe_intrinsics, self.camera_pose(),
            max_range=self.fast_range_units, boulders_only=True)
        valid = np.isfinite(depth_units)
        values = np.where(valid, depth_units / ups, -1.0).astype(np.float32)
        dets = detect(DepthMap(values=values, valid=valid),
                      self.config.detector, timestamp=t)
        return [d.scaled(self.box_scale) for d in dets]

    def depth_job(self, t: float) -> MonoDepthResult:
        """Slow channel: full-scene ground truth through the depth backend."""
        ups = self.config.rig.units_per_meter
        depth_units, _ = probe_depth(
            self.config.scene, self.probe_intrinsics, self.camera_pose(),
            max_range=self.slow_range_units, boulders_only=False)
        gt_m = np.where(np.isfinite(depth_units), depth_units / ups, np.inf)
        return estimate(self.config.monodepth, gt_m, capture_timestamp=t)

    def render(self, live_px: int | None = None, timestamp: float = 0.0):
        """Full shaded stereo render at the current pose (for logs and UI)."""
        rig = self.config.rig
        if live_px and live_px != rig.intrinsics.width_px:
            intr = rig.intrinsics
            rig = replace(rig, intrinsics=CameraIntrinsics.from_fov(
                live_px, live_px, intr.fov_h_deg, intr.fov_v_deg))
        return render_stereo(self.config.scene, rig, self.camera_pose(),
                             timestamp=timestamp)

    def colliding_boulder(self, state: RoverState | None = None):
        s = state if state is not None else self.state
        for boulder in self.config.scene.boulders:
            if boulder.footprint_contains(s.x, s.y):
                return boulder
        return None


def plan_trajectory(plan: PathPlan, params: RoverParams, state: RoverState,
                    rate: float) -> np.ndarray:
    """Intended route: the plan integrated with no safety gating, as an
    (N, 2) polyline."""
    points = [(state.x, state.y)]
    t = 0.0
    total = plan.total_duration
    dt_nominal = 1.0 / rate
    s = state
    while t < total - 1e-12:
        dt = min(dt_nominal, total - t)
        s = step(s, plan.command_at(t), dt, params)
        t += dt
        points.append((s.x, s.y))
    return np.asarray(points)


@dataclass(frozen=True)
class SimulationResult:
    execution: ExecutionReport
    nav: NavReport
    run_dir: Path
    collisions: int


def run_simulation(config: AppConfig, plan: PathPlan, out_root,
                   run_id: str | None = None,
                   log_frames_every: float = 0.0) -> SimulationResult:
    """Execute a plan headlessly: perception, gating, logging, nav metrics."""
    world = SimWorld(config)
    schedule = config.schedule
    if schedule.clock != "simulated":
        schedule = replace(schedule, clock="simulated")
    writer = SessionWriter(out_root, run_id if run_id is not None else config.run_id)
    telemetry = TelemetrySimulator(seed=config.scene.terrain.seed)
    collisions = 0
    next_telemetry = 0.0
    next_frame = 0.0 if log_frames_every > 0 else math.inf
    pending_gt: dict[float, np.ndarray] = {}
    logged_depth_ts: float | None = None

    def depth_job(t):
        ups = config.rig.units_per_meter
        depth_units, _ = probe_depth(
            config.scene, world.probe_intrinsics, world.camera_pose(),
            max_range=world.slow_range_units, boulders_only=False)
        gt_m = np.where(np.isfinite(depth_units), depth_units / ups, np.inf)
        pending_gt[t] = gt_m.astype(np.float32)
        return estimate(config.monodepth, gt_m, capture_timestamp=t)

    def sink(snapshot):
        nonlocal logged_depth_ts
        writer.log_detections(snapshot.detections_timestamp, snapshot.detections)
        if snapshot.has_depth:
            capture = snapshot.depth.capture_timestamp
            if capture != logged_depth_ts and capture in pending_gt:
                writer.log_depth_pair(snapshot.detections_timestamp,
                                      snapshot.depth.depth.values,
                                      pending_gt.pop(capture))
                logged_depth_ts = capture

    loop = PerceptionLoop(schedule, world.fast_detections, depth_job,
                          snapshot_sink=sink)

    def on_tick(t, state, snapshot):
        nonlocal collisions, next_telemetry, next_frame
        world.on_tick(t, state, snapshot)
        writer.log_pose(t, TrajectorySample(t=t, x=state.x, y=state.y,
                                            heading=state.heading,
                                            halted=state.halted))
        if world.colliding_boulder(state) is not None:
            collisions += 1
        if t >= next_telemetry:
            writer.log_telemetry(telemetry.sample(t))
            next_telemetry += 1.0
        if t >= next_frame:
            frame = world.render(timestamp=t)
            writer.log_frame(t, frame.left, frame.gt_depth_left)
            next_frame += log_frames_every

    initial = world.state
    writer.log_pose(0.0, TrajectorySample(t=0.0, x=initial.x, y=initial.y,
                                          heading=initial.heading,
                                          halted=initial.halted))
    report = execute_path(
        plan, loop, config.safety, config.rover, initial_state=initial,
        control_rate=schedule.detection_rate,
        image_width_px=config.rig.intrinsics.width_px, on_tick=on_tick)
    writer.close()

    intended = plan_trajectory(plan, config.rover, initial,
                               schedule.detection_rate)
    nav = nav_metrics(report, intended)
    reports = {
        "nav": nav.to_dict(),
        "collisions": collisions,
        "intended": [[float(x), float(y)] for x, y in intended],
        "plan": plan.to_dict(),
    }
    (writer.dir / "reports.json").write_text(json.dumps(reports, indent=2))
    (writer.dir / "trajectory.jsonl").write_text(report.trajectory_jsonl())
    return SimulationResult(execution=report, nav=nav, run_dir=writer.dir,
                            collisions=collisions)


# ---------------------------------------------------------------------------
# Randomized obstacle courses (used by tests, demos, and the CLI)
# ---------------------------------------------------------------------------

def make_course(seed: int, with_obstacle: bool) -> tuple[AppConfig, PathPlan]:
    """A straight driving course on gently rough ground, optionally with one
    boulder planted on the route."""
    from deskrover.config import load_config

    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xC0])
    course_len = float(rng.uniform(2.5, 4.0))
    boulders = []
    if with_obstacle:
        distance = float(rng.uniform(1.5, min(3.0, course_len - 0.3)))
        radius = float(rng.uniform(0.08, 0.22))
        lateral = float(rng.uniform(-0.05, 0.05))
        radii = [radius * float(rng.uniform(0.85, 1.15)) for _ in range(3)]
        boulders.append({"center": [distance, lateral, radii[2]], "radii": radii})
    config = load_config({
        "scene": {
            "seed": seed, "extent": [24.0, 24.0], "cell_size": 0.25,
            "roughness": 0.0, "boulders": boulders,
            "texture": {"amplitude": 0.45, "scale": 0.4},
        },
        "rig": {"units_per_meter": 1.0},
        "safety": {"stop_range": 0.5},
        "rover": {"wheel_speed": 0.5, "track_width": 0.3,
                  "camera_height": 0.25, "camera_pitch_deg": 12.0,
                  "probe_resolution": 96},
        "run_id": f"course-{seed}",
    })
    plan = PathPlan.straight(course_len / config.rover.wheel_speed,
                             name=f"course-{seed}")
    return config, plan
