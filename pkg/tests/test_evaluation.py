import json
import math

import numpy as np
import pytest

from deskrover.detect import Detection
from deskrover.evaluation import (
    EVAL_BAND,
    DepthEvalReport,
    SessionReader,
    SessionWriter,
    TelemetrySimulator,
    depth_mae,
    nav_metrics,
)
from deskrover.rover import (
    ExecutionReport,
    HaltEvent,
    RoverState,
    TrajectorySample,
)
from deskrover.stereo import INVALID, DepthMap

from oracles import point_segment_distance


def as_map(values, valid=None):
    arr = np.asarray(values, dtype=np.float32)
    if valid is None:
        valid = np.isfinite(arr) & (arr > 0)
    return DepthMap(values=np.where(valid, arr, INVALID).astype(np.float32),
                    valid=np.asarray(valid, dtype=bool))


def flat_report(points, completed=True, halts=()):
    traj = tuple(TrajectorySample(t=float(i), x=float(x), y=float(y),
                                  heading=0.0, halted=False)
                 for i, (x, y) in enumerate(points))
    return ExecutionReport(completed=completed, elapsed=float(len(points) - 1),
                           trajectory=traj, halt_events=tuple(halts),
                           final_state=RoverState())


class TestDepthMae:
    def test_exact_estimate(self):
        gt = as_map(np.full((10, 10), 1.0))
        report = depth_mae(gt, gt)
        assert report.mae == 0.0
        assert report.rmse == 0.0
        assert report.valid_fraction == 1.0

    def test_constant_bias(self):
        gt = as_map(np.full((10, 10), 1.0))
        est = as_map(np.full((10, 10), 1.1))
        report = depth_mae(est, gt)
        assert report.mae == pytest.approx(0.1, abs=1e-6)
        assert report.rmse == pytest.approx(0.1, abs=1e-6)

    def test_alternating_error_mae_rmse(self):
        # +-0.1 on half the pixels, exact elsewhere: mae 0.05, rmse ~0.0707
        gt_vals = np.full((10, 10), 1.0)
        est_vals = gt_vals.copy()
        est_vals[::2, ::2] += 0.1
        est_vals[1::2, ::2] -= 0.1
        report = depth_mae(as_map(est_vals), as_map(gt_vals))
        assert report.mae == pytest.approx(0.05, abs=1e-6)
        assert report.rmse == pytest.approx(0.1 / math.sqrt(2.0), abs=1e-6)

    def test_band_edges_inclusive(self):
        gt_vals = np.array([[0.15, 2.0, 0.149, 2.001]])
        est_vals = gt_vals + 0.01
        report = depth_mae(as_map(est_vals), as_map(gt_vals))
        in_band = sum(b.count for b in report.bins)
        assert in_band == 2

    def test_empty_overlap_is_explicit(self):
        gt = as_map(np.full((5, 5), 10.0))  # everything outside the band
        est = as_map(np.full((5, 5), 10.0))
        report = depth_mae(est, gt)
        assert report.is_empty
        assert math.isnan(report.mae)
        assert report.valid_fraction == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        gt_vals = rng.uniform(0.2, 1.9, size=(8, 8))
        est_vals = gt_vals + rng.normal(0, 0.05, size=(8, 8))
        a = depth_mae(as_map(est_vals), as_map(gt_vals))
        perm = rng.permutation(64)
        b = depth_mae(as_map(est_vals.ravel()[perm].reshape(8, 8)),
                      as_map(gt_vals.ravel()[perm].reshape(8, 8)))
        assert a.mae == pytest.approx(b.mae, rel=1e-12)
        assert a.rmse == pytest.approx(b.rmse, rel=1e-12)

    def test_bins_cover_band(self):
        gt_vals = np.linspace(0.15, 2.0, 100).reshape(10, 10)
        report = depth_mae(as_map(gt_vals), as_map(gt_vals))
        assert sum(b.count for b in report.bins) == 100
        assert report.bins[0].center == pytest.approx((0.15 + 0.40) / 2)

    def test_valid_fraction_counts_missing_estimate(self):
        gt_vals = np.full((10, 10), 1.0)
        est_valid = np.zeros((10, 10), bool)
        est_valid[:5] = True
        report = depth_mae(as_map(gt_vals, est_valid), as_map(gt_vals))
        assert report.valid_fraction == pytest.approx(0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            depth_mae(as_map(np.ones((4, 4))), as_map(np.ones((4, 5))))


class TestNavMetrics:
    def test_on_polyline_zero_deviation(self):
        intended = np.array([[0.0, 0.0], [5.0, 0.0]])
        report = flat_report([(x, 0.0) for x in np.linspace(0, 5, 11)])
        nav = nav_metrics(report, intended)
        assert nav.path_deviation == pytest.approx(0.0, abs=1e-12)
        assert nav.completion

    def test_parallel_offset(self):
        intended = np.array([[0.0, 0.0], [5.0, 0.0]])
        report = flat_report([(x, 0.2) for x in np.linspace(0, 5, 11)])
        nav = nav_metrics(report, intended)
        assert nav.path_deviation == pytest.approx(0.2, abs=1e-12)

    def test_l_shaped_path_matches_bruteforce(self):
        intended = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]])
        points = [(0.3, 0.4), (1.0, -0.5), (2.5, 1.0), (1.8, 2.2)]
        report = flat_report(points)
        nav = nav_metrics(report, intended)
        expected = np.mean([
            min(point_segment_distance(p, intended[i], intended[i + 1])
                for i in range(len(intended) - 1))
            for p in points])
        assert nav.path_deviation == pytest.approx(float(expected), abs=1e-12)

    def test_halt_count(self):
        report = flat_report([(0, 0), (1, 0)], completed=False,
                             halts=[HaltEvent(t=1.0, reason="x")])
        nav = nav_metrics(report, np.array([[0.0, 0.0], [5.0, 0.0]]))
        assert nav.halt_count == 1
        assert not nav.completion

    def test_empty_polyline_rejected(self):
        with pytest.raises(ValueError):
            nav_metrics(flat_report([(0, 0)]), np.zeros((0, 2)))


class TestTelemetry:
    def test_temperature_band(self):
        sim = TelemetrySimulator(seed=1)
        temps = [sim.sample(float(t)).synthetic_temp_c for t in range(500)]
        assert min(temps) >= 40.0
        assert max(temps) <= 65.0

    def test_deterministic(self):
        a = [TelemetrySimulator(seed=3).sample(float(t)).synthetic_temp_c
             for t in range(20)]
        b = [TelemetrySimulator(seed=3).sample(float(t)).synthetic_temp_c
             for t in range(20)]
        assert a == b


class TestSessionLog:
    def test_layout_and_order(self, tmp_path):
        with SessionWriter(tmp_path, "r1") as writer:
            for i in range(10):
                writer.log_detections(float(i), [
                    Detection(box=(0, 0, 5, 5), confidence=0.5, range_m=0.4,
                              source_timestamp=float(i))])
            writer.log_frame(0.0, np.zeros((8, 8), np.uint8),
                             np.ones((8, 8), np.float32))
        run = tmp_path / "r1"
        assert (run / "index.json").exists()
        lines = (run / "events.jsonl").read_text().splitlines()
        assert len(lines) == 10
        ts = [json.loads(line)["ts"] for line in lines]
        assert ts == sorted(ts)
        index = json.loads((run / "index.json").read_text())
        kinds = {r["kind"] for r in index["records"]}
        assert kinds == {"detections", "rgb", "depth"}
        assert len(index["records"]) == 12

    def test_empty_run_has_index(self, tmp_path):
        with SessionWriter(tmp_path, "empty"):
            pass
        index = json.loads((tmp_path / "empty" / "index.json").read_text())
        assert index["records"] == []

    def test_timestamp_regression_rejected(self, tmp_path):
        with SessionWriter(tmp_path, "r2") as writer:
            writer.log_detections(1.0, [])
            with pytest.raises(ValueError):
                writer.log_detections(0.5, [])

    def test_detection_replay_round_trip(self, tmp_path):
        dets = [Detection(box=(1, 2, 3, 4), confidence=0.6, range_m=0.7,
                          source_timestamp=0.5)]
        with SessionWriter(tmp_path, "r3") as writer:
            writer.log_detections(0.5, dets)
        reader = SessionReader(tmp_path / "r3")
        [(ts, replayed)] = reader.detections()
        assert ts == 0.5
        assert replayed == dets

    def test_replay_reproduces_nav_metrics(self, tmp_path):
        """Metrics computed from the session log equal the live ones."""
        from deskrover.sim import make_course, plan_trajectory, run_simulation

        config, plan = make_course(seed=21, with_obstacle=True)
        result = run_simulation(config, plan, out_root=tmp_path, run_id="live")
        intended = plan_trajectory(plan, config.rover,
                                   RoverState(x=config.mount.initial_x,
                                              y=config.mount.initial_y,
                                              heading=config.mount.initial_heading),
                                   config.schedule.detection_rate)
        live = nav_metrics(result.execution, intended)

        replayed_exec = SessionReader(result.run_dir).replay_execution()
        replayed = nav_metrics(replayed_exec, intended)
        assert replayed.completion == live.completion
        assert replayed.time_s == live.time_s
        assert replayed.path_deviation == live.path_deviation
        assert replayed.halt_count == live.halt_count
