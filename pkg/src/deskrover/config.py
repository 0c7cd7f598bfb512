"""Application configuration: one JSON file with per-subsystem sections.

Sections: scene, rig, sgm, monodepth, detector, schedule, rover, safety,
server.  Every section is optional (defaults apply); unknown keys are
rejected so typos fail loudly at startup instead of silently running with
defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from deskrover.detect import DetectorConfig
from deskrover.geometry import CameraIntrinsics, StereoRig
from deskrover.monodepth import MonoDepthConfig
from deskrover.pipeline import ScheduleConfig
from deskrover.rover import PathPlan, RoverParams, SafetyConfig
from deskrover.scene import SceneDescription, place_boulders, scene_from_dict
from deskrover.stereo import SgmParams


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def _take(data: dict, allowed: set[str], section: str) -> dict:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{section}' section: {sorted(unknown)}")
    return data


@dataclass(frozen=True)
class MountConfig:
    """Camera mount and perception-probe geometry of the simulated rover."""

    camera_height: float = 0.25     # units above the terrain at the rover
    camera_pitch_deg: float = 12.0  # downward tilt
    probe_resolution: int = 96      # fast/slow channel raycast resolution
    initial_x: float = 0.0
    initial_y: float = 0.0
    initial_heading: float = 0.0

    def __post_init__(self):
        if self.camera_height <= 0 or self.probe_resolution < 16:
            raise ConfigError("camera_height must be > 0 and probe_resolution >= 16")


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8710
    frame_rate_limit: float = 10.0  # Hz cap on frame pushes per client
    live_render_px: int = 200       # live-feed render resolution
    telemetry_period: float = 1.0

    def __post_init__(self):
        if not 0 < self.port < 65536:
            raise ConfigError(f"invalid port {self.port}")
        if self.frame_rate_limit <= 0:
            raise ConfigError("frame_rate_limit must be positive")


@dataclass(frozen=True)
class AppConfig:
    scene: SceneDescription
    rig: StereoRig
    sgm: SgmParams
    monodepth: MonoDepthConfig
    detector: DetectorConfig
    schedule: ScheduleConfig
    rover: RoverParams
    mount: MountConfig
    safety: SafetyConfig
    server: ServerConfig
    plan: PathPlan | None = None
    run_id: str = "run"

    @classmethod
    def defaults(cls) -> "AppConfig":
        return load_config({})


_SECTIONS = {"scene", "rig", "sgm", "monodepth", "detector", "schedule",
             "rover", "safety", "server", "plan", "run_id"}

_DEFAULT_SCENE = {
    "seed": 7, "extent": [24.0, 24.0], "cell_size": 0.25, "roughness": 0.04,
    "boulders": [], "sun_direction": [0.35, 0.25, 0.9], "albedo": 0.75,
    "texture": {"amplitude": 0.45, "scale": 0.4},
}


def _load_scene(data: dict) -> SceneDescription:
    allowed = {"seed", "extent", "cell_size", "roughness", "boulders",
               "sun_direction", "albedo", "texture", "ambient", "place_boulders"}
    data = _take(dict(data), allowed, "scene")
    auto = data.pop("place_boulders", None)
    merged = {**_DEFAULT_SCENE, **data}
    scene = scene_from_dict(merged)
    if auto:
        spec = _take(dict(auto), {"seed", "count", "radius_range", "margin"},
                     "scene.place_boulders")
        extra = place_boulders(
            scene.terrain, seed=int(spec.get("seed", merged["seed"])),
            count=int(spec["count"]),
            radius_range=tuple(spec.get("radius_range", (0.08, 0.25))),
            margin=float(spec.get("margin", 1.0)))
        offset = len(scene.boulders)
        rebased = tuple(
            type(b)(center=b.center, radii=b.radii, id=offset + i + 1)
            for i, b in enumerate(extra))
        scene = SceneDescription(
            terrain=scene.terrain, boulders=scene.boulders + rebased,
            sun_direction=scene.sun_direction, albedo=scene.albedo,
            texture=scene.texture, ambient=scene.ambient)
    return scene


def _load_rig(data: dict) -> StereoRig:
    allowed = {"preset", "width_px", "height_px", "fov_h_deg", "fov_v_deg",
               "baseline", "units_per_meter"}
    data = _take(dict(data), allowed, "rig")
    if data.get("preset") == "reference":
        return StereoRig.reference_preset(
            units_per_meter=float(data.get("units_per_meter", 500.0)))
    if "preset" in data:
        raise ConfigError(f"unknown rig preset {data['preset']!r}")
    intr = CameraIntrinsics.from_fov(
        int(data.get("width_px", 500)), int(data.get("height_px", 500)),
        float(data.get("fov_h_deg", 60.0)),
        float(data["fov_v_deg"]) if "fov_v_deg" in data else None)
    return StereoRig(intrinsics=intr, baseline=float(data.get("baseline", 24.0)),
                     units_per_meter=float(data.get("units_per_meter", 1.0)))


def _load_section(cls, data: dict, section: str, fields_: set[str]):
    data = _take(dict(data), fields_, section)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from exc


def load_config(data: dict) -> AppConfig:
    """Build an :class:`AppConfig` from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    data = _take(dict(data), _SECTIONS, "config")

    sgm_data = dict(data.get("sgm", {}))
    if "census_window" in sgm_data:
        sgm_data["census_window"] = tuple(sgm_data["census_window"])

    rover_data = dict(data.get("rover", {}))
    mount_keys = {"camera_height", "camera_pitch_deg", "probe_resolution",
                  "initial_x", "initial_y", "initial_heading"}
    mount_data = {k: rover_data.pop(k) for k in list(rover_data) if k in mount_keys}

    plan = None
    if data.get("plan") is not None:
        try:
            plan = PathPlan.from_dict(data["plan"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'plan' section: {exc}") from exc

    return AppConfig(
        scene=_load_scene(data.get("scene", {})),
        rig=_load_rig(data.get("rig", {"units_per_meter": 1.0})),
        sgm=_load_section(SgmParams, sgm_data, "sgm",
                          {"num_disparities", "census_window", "p1", "p2",
                           "num_paths", "uniqueness_ratio", "lr_max_diff",
                           "speckle_window", "speckle_range"}),
        monodepth=_load_section(MonoDepthConfig, data.get("monodepth", {}),
                                "monodepth",
                                {"backend", "max_range", "latency",
                                 "noise_sigma", "seed"}),
        detector=_load_section(DetectorConfig, data.get("detector", {}),
                               "detector",
                               {"near_threshold", "confidence_threshold",
                                "nms_iou_threshold", "min_area", "rate_hz"}),
        schedule=_load_section(ScheduleConfig, data.get("schedule", {}),
                               "schedule",
                               {"detection_rate", "depth_rate", "depth_latency",
                                "overlap_policy", "clock"}),
        rover=_load_section(RoverParams, rover_data, "rover",
                            {"wheel_speed", "track_width"}),
        mount=_load_section(MountConfig, mount_data, "rover",
                            mount_keys),
        safety=_load_section(SafetyConfig, data.get("safety", {}), "safety",
                             {"stop_range", "corridor_halfwidth"}),
        server=_load_section(ServerConfig, data.get("server", {}), "server",
                             {"host", "port", "frame_rate_limit",
                              "live_render_px", "telemetry_period"}),
        plan=plan,
        run_id=str(data.get("run_id", "run")),
    )


def load_config_file(path) -> AppConfig:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return load_config(data)
