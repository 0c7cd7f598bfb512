"""Evaluation harness: metric depth error over a band, navigation
effectiveness, synthetic telemetry, and timestamped session logging.

Depth accuracy follows the deployed protocol: mean absolute error against
ground truth over the 0.15-2.0 m band (band edges inclusive), with a
per-bin breakdown every 0.25 m.  Navigation effectiveness is completion,
elapsed time, and mean lateral deviation from the intended polyline.

Session logs are a directory of plainly diffable artifacts::

    runs/<run_id>/
        index.json      # every record: {ts, kind, ref}
        events.jsonl    # detections / telemetry / pose rows
        rgb/*.png
        depth/*.pfm
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from deskrover.detect import Detection
from deskrover.formats import write_pfm, write_png
from deskrover.rover import ExecutionReport, TrajectorySample
from deskrover.stereo import DepthMap

EVAL_BAND = (0.15, 2.0)
BIN_WIDTH = 0.25


@dataclass(frozen=True)
class DepthBin:
    center: float
    mae: float    # NaN when the bin is empty
    count: int


@dataclass(frozen=True)
class DepthEvalReport:
    mae: float
    rmse: float
    valid_fraction: float
    band: tuple[float, float]
    bins: tuple[DepthBin, ...]

    @property
    def is_empty(self) -> bool:
        return math.isnan(self.mae)

    def to_dict(self) -> dict:
        return {
            "mae_m": self.mae, "rmse_m": self.rmse,
            "valid_fraction": self.valid_fraction,
            "band_m": list(self.band),
            "bins": [{"center_m": b.center, "mae_m": b.mae, "count": b.count}
                     for b in self.bins],
        }


def _band_bins(band: tuple[float, float]) -> list[tuple[float, float]]:
    lo, hi = band
    edges = [lo]
    while edges[-1] + BIN_WIDTH < hi - 1e-12:
        edges.append(edges[-1] + BIN_WIDTH)
    edges.append(hi)
    return list(zip(edges[:-1], edges[1:]))


def depth_mae(estimate: DepthMap, gt: DepthMap,
              band: tuple[float, float] = EVAL_BAND) -> DepthEvalReport:
    """MAE/RMSE between estimate and ground truth over a depth band (meters).

    Only pixels valid in both maps with ground truth inside the inclusive
    band contribute.  ``valid_fraction`` is the share of in-band ground-truth
    pixels the estimate got right enough to even score.  An empty overlap
    yields NaN errors (an explicit empty report, never silently zero).
    """
    if estimate.shape != gt.shape:
        raise ValueError(f"shape mismatch {estimate.shape} vs {gt.shape}")
    lo, hi = band
    in_band = gt.valid & (gt.values >= lo) & (gt.values <= hi)
    scored = in_band & estimate.valid
    denom = int(in_band.sum())
    valid_fraction = float(scored.sum()) / denom if denom else 0.0

    bins_spec = _band_bins(band)
    if not scored.any():
        bins = tuple(DepthBin(center=(a + b) / 2.0, mae=math.nan, count=0)
                     for a, b in bins_spec)
        return DepthEvalReport(mae=math.nan, rmse=math.nan,
                               valid_fraction=valid_fraction, band=band, bins=bins)

    err = estimate.values[scored].astype(np.float64) - gt.values[scored]
    gt_vals = gt.values[scored].astype(np.float64)
    bins = []
    for i, (a, b) in enumerate(bins_spec):
        # half-open bins except the last, so every in-band pixel lands once
        sel = (gt_vals >= a) & ((gt_vals < b) if i < len(bins_spec) - 1
                                else (gt_vals <= b))
        count = int(sel.sum())
        mae = float(np.abs(err[sel]).mean()) if count else math.nan
        bins.append(DepthBin(center=(a + b) / 2.0, mae=mae, count=count))
    return DepthEvalReport(
        mae=float(np.abs(err).mean()),
        rmse=float(np.sqrt((err ** 2).mean())),
        valid_fraction=valid_fraction, band=band, bins=tuple(bins))


def gt_depth_in_meters(frame, rig) -> DepthMap:
    """Ground-truth depth of a rendered frame as a metric DepthMap."""
    gt_units = frame.gt_depth_left
    valid = np.isfinite(gt_units) & (gt_units > 0)
    values = np.where(valid, gt_units / rig.units_per_meter, -1.0)
    return DepthMap(values=values.astype(np.float32), valid=valid)


# ---------------------------------------------------------------------------
# Navigation metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NavReport:
    completion: bool
    time_s: float
    path_deviation: float  # mean lateral distance from the intended polyline
    halt_count: int

    def to_dict(self) -> dict:
        return {"completion": self.completion, "time_s": self.time_s,
                "path_deviation_m": self.path_deviation,
                "halt_count": self.halt_count}


def _point_to_polyline(px: float, py: float, polyline: np.ndarray) -> float:
    best = math.inf
    for (ax, ay), (bx, by) in zip(polyline[:-1], polyline[1:]):
        abx, aby = bx - ax, by - ay
        denom = abx * abx + aby * aby
        if denom == 0.0:
            d = math.hypot(px - ax, py - ay)
        else:
            t = ((px - ax) * abx + (py - ay) * aby) / denom
            t = min(max(t, 0.0), 1.0)
            d = math.hypot(px - (ax + t * abx), py - (ay + t * aby))
        best = min(best, d)
    return best


def nav_metrics(report: ExecutionReport, intended: np.ndarray) -> NavReport:
    """Navigation effectiveness against an intended route polyline (N, 2)."""
    intended = np.asarray(intended, dtype=np.float64)
    if intended.ndim != 2 or intended.shape[0] < 1 or intended.shape[1] != 2:
        raise ValueError("intended polyline must be an (N>=1, 2) array")
    if intended.shape[0] == 1:
        intended = np.vstack([intended, intended])
    if not report.trajectory:
        raise ValueError("trajectory is empty")
    deviations = [_point_to_polyline(s.x, s.y, intended)
                  for s in report.trajectory]
    return NavReport(completion=report.completed, time_s=report.elapsed,
                     path_deviation=float(np.mean(deviations)),
                     halt_count=len(report.halt_events))


# ---------------------------------------------------------------------------
# Synthetic telemetry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Telemetry:
    timestamp: float
    cpu_load: float
    memory_mb: float
    synthetic_temp_c: float

    def to_wire(self) -> dict:
        return {"ts": self.timestamp, "cpu_load": self.cpu_load,
                "memory_mb": self.memory_mb, "temp_c": self.synthetic_temp_c}


class TelemetrySimulator:
    """Slow seeded random walks for the cosmetic telemetry channel.

    The temperature walk is clipped to the observed operating band
    (40-65 C); this models nothing, it just feeds the GUI corner readout.
    """

    TEMP_BAND = (40.0, 65.0)

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x7E1E])
        self._temp = 42.0
        self._load = 0.55
        self._mem = 900.0

    def sample(self, timestamp: float) -> Telemetry:
        lo, hi = self.TEMP_BAND
        self._temp = float(np.clip(self._temp + self._rng.normal(0.0, 0.4), lo, hi))
        self._load = float(np.clip(self._load + self._rng.normal(0.0, 0.05), 0.0, 1.0))
        self._mem = float(np.clip(self._mem + self._rng.normal(0.0, 6.0), 500.0, 3500.0))
        return Telemetry(timestamp=timestamp, cpu_load=round(self._load, 4),
                         memory_mb=round(self._mem, 1),
                         synthetic_temp_c=round(self._temp, 2))


# ---------------------------------------------------------------------------
# Session logging
# ---------------------------------------------------------------------------

EVENT_KINDS = ("detections", "telemetry", "pose")
RASTER_KINDS = ("rgb", "depth")


class SessionWriter:
    """Append-only session log under ``root/<run_id>/``."""

    def __init__(self, root, run_id: str):
        self.run_id = run_id
        self.dir = Path(root) / run_id
        (self.dir / "rgb").mkdir(parents=True, exist_ok=True)
        (self.dir / "depth").mkdir(parents=True, exist_ok=True)
        self._events = open(self.dir / "events.jsonl", "w")
        self._records: list[dict] = []
        self._event_count = 0
        self._last_ts: dict[str, float] = {}
        self._frame_count = 0
        self._depth_count = 0

    def _check_order(self, kind: str, ts: float) -> None:
        last = self._last_ts.get(kind)
        if last is not None and ts < last:
            raise ValueError(
                f"{kind} timestamps must be non-decreasing ({ts} after {last})")
        self._last_ts[kind] = ts

    def log_event(self, kind: str, ts: float, payload: dict) -> None:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        self._check_order(kind, ts)
        row = {"ts": ts, "kind": kind, **payload}
        self._events.write(json.dumps(row) + "\n")
        self._events.flush()
        self._records.append({"ts": ts, "kind": kind,
                              "ref": f"events.jsonl:{self._event_count}"})
        self._event_count += 1

    def log_detections(self, ts: float, detections) -> None:
        self.log_event("detections", ts,
                       {"items": [d.to_wire() for d in detections]})

    def log_pose(self, ts: float, sample: TrajectorySample) -> None:
        self.log_event("pose", ts, sample.to_wire())

    def log_telemetry(self, telemetry: Telemetry) -> None:
        self.log_event("telemetry", telemetry.timestamp, telemetry.to_wire())

    def log_frame(self, ts: float, image: np.ndarray,
                  depth: np.ndarray | None = None) -> None:
        """Log an RGB raster (PNG) and optionally its depth map (PFM)."""
        self._check_order("rgb", ts)
        name = f"{self._frame_count:06d}"
        self._frame_count += 1
        write_png(self.dir / "rgb" / f"{name}.png", image)
        self._records.append({"ts": ts, "kind": "rgb", "ref": f"rgb/{name}.png"})
        if depth is not None:
            self._check_order("depth", ts)
            write_pfm(self.dir / "depth" / f"{name}.pfm", depth)
            self._records.append({"ts": ts, "kind": "depth",
                                  "ref": f"depth/{name}.pfm"})

    def log_depth_pair(self, ts: float, estimate_m: np.ndarray,
                       gt_m: np.ndarray) -> None:
        """Log an estimated metric depth map with its aligned ground truth."""
        self._check_order("depth", ts)
        name = f"{self._depth_count:06d}"
        self._depth_count += 1
        write_pfm(self.dir / "depth" / f"est_{name}.pfm", estimate_m)
        write_pfm(self.dir / "depth" / f"gt_{name}.pfm", gt_m)
        self._records.append({"ts": ts, "kind": "depth",
                              "ref": f"depth/est_{name}.pfm",
                              "gt_ref": f"depth/gt_{name}.pfm"})

    def close(self) -> None:
        self._events.close()
        index = {"run_id": self.run_id, "records": self._records}
        (self.dir / "index.json").write_text(json.dumps(index, indent=2))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SessionReader:
    """Read back a session directory written by :class:`SessionWriter`."""

    def __init__(self, run_dir):
        self.dir = Path(run_dir)
        index = json.loads((self.dir / "index.json").read_text())
        self.run_id = index["run_id"]
        self.records = index["records"]
        events_path = self.dir / "events.jsonl"
        self.events = []
        if events_path.exists():
            for line in events_path.read_text().splitlines():
                if line.strip():
                    self.events.append(json.loads(line))

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["kind"] == kind]

    def depth_pairs(self) -> list[tuple[float, Path, Path]]:
        """(ts, estimate path, ground-truth path) of logged depth pairs."""
        return [(r["ts"], self.dir / r["ref"], self.dir / r["gt_ref"])
                for r in self.records
                if r["kind"] == "depth" and "gt_ref" in r]

    def detections(self) -> list[tuple[float, list[Detection]]]:
        return [(e["ts"], [Detection.from_wire(d) for d in e["items"]])
                for e in self.of_kind("detections")]

    def trajectory(self) -> list[TrajectorySample]:
        return [TrajectorySample(t=e["t"], x=e["x"], y=e["y"],
                                 heading=e["heading"], halted=e["halted"])
                for e in self.of_kind("pose")]

    def replay_execution(self) -> ExecutionReport:
        """Reconstruct the execution report recorded in the pose rows."""
        from deskrover.rover import HaltEvent, RoverState

        samples = self.trajectory()
        if not samples:
            raise ValueError("session has no pose records")
        halts = []
        prev_halted = False
        for s in samples:
            if s.halted and not prev_halted:
                halts.append(HaltEvent(t=s.t, reason="replayed"))
            prev_halted = s.halted
        last = samples[-1]
        return ExecutionReport(
            completed=not last.halted, elapsed=last.t,
            trajectory=tuple(samples), halt_events=tuple(halts),
            final_state=RoverState(x=last.x, y=last.y, heading=last.heading,
                                   halted=False))
