import json

import numpy as np
import pytest

from deskrover.cli import main
from deskrover.formats import read_pfm, write_png


def run_cli(*argv):
    return main(list(argv))


class TestTrace:
    def test_default_rates_30s(self, tmp_path, capsys):
        out = tmp_path / "trace.jsonl"
        assert run_cli("trace", "--duration", "30", "--out", str(out)) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        detects = [l for l in lines if l["ch"] == "detect"]
        starts = [l for l in lines if l["ch"] == "depth_start"]
        readys = [l for l in lines if l["ch"] == "depth_ready"]
        assert len(detects) == 300
        assert [s["t"] for s in starts] == [0.0, 10.0, 20.0]
        assert [r["t"] for r in readys] == [7.0, 17.0, 27.0]

    def test_stdout(self, capsys):
        assert run_cli("trace", "--duration", "0.5") == 0
        out = capsys.readouterr().out
        assert len(out.splitlines()) == 6  # 5 detect ticks + 1 depth_start


class TestMatch:
    def test_shifted_pair_end_to_end(self, tmp_path):
        import sys
        sys.path.insert(0, str((tmp_path / "..").resolve()))
        from test_stereo import shifted_pair

        s = 6
        left, right = shifted_pair(64, 96, s, seed=1)
        write_png(tmp_path / "l.png", left)
        write_png(tmp_path / "r.png", right)
        out = tmp_path / "d.pfm"
        code = run_cli("match", "--left", str(tmp_path / "l.png"),
                       "--right", str(tmp_path / "r.png"),
                       "--out", str(out), "--num-disparities", "16")
        assert code == 0
        disp = read_pfm(out)
        interior = disp[8:-8, s + 8: -8]
        valid = interior >= 0
        assert valid.mean() > 0.8
        assert np.abs(interior[valid] - s).mean() < 0.5

    def test_depth_output(self, tmp_path):
        from test_stereo import shifted_pair
        left, right = shifted_pair(48, 64, 4, seed=2)
        write_png(tmp_path / "l.png", left)
        write_png(tmp_path / "r.png", right)
        code = run_cli("match", "--left", str(tmp_path / "l.png"),
                       "--right", str(tmp_path / "r.png"),
                       "--out", str(tmp_path / "d.pfm"),
                       "--depth-out", str(tmp_path / "z.pfm"),
                       "--num-disparities", "16",
                       "--focal", "100.0", "--baseline", "8.0")
        assert code == 0
        disp = read_pfm(tmp_path / "d.pfm")
        depth = read_pfm(tmp_path / "z.pfm")
        ok = (disp > 0) & (depth > 0)
        assert np.allclose(depth[ok], 100.0 * 8.0 / disp[ok], rtol=1e-5)

    def test_missing_file_exit_2(self, tmp_path):
        code = run_cli("match", "--left", str(tmp_path / "nope.png"),
                       "--right", str(tmp_path / "nope.png"),
                       "--out", str(tmp_path / "d.pfm"))
        assert code == 2

    def test_size_mismatch_exit_1(self, tmp_path):
        write_png(tmp_path / "a.png", np.zeros((10, 10), np.uint8))
        write_png(tmp_path / "b.png", np.zeros((10, 12), np.uint8))
        code = run_cli("match", "--left", str(tmp_path / "a.png"),
                       "--right", str(tmp_path / "b.png"),
                       "--out", str(tmp_path / "d.pfm"))
        assert code == 1


class TestRender:
    def test_writes_artifacts(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "scene": {"seed": 2, "extent": [20.0, 20.0], "cell_size": 0.25,
                      "roughness": 0.0,
                      "boulders": [{"center": [2.0, 0.0, 0.3],
                                    "radii": [0.3, 0.3, 0.3]}],
                      "texture": {"amplitude": 0.45, "scale": 0.4}},
            "rig": {"width_px": 96, "height_px": 96, "fov_h_deg": 60.0,
                    "baseline": 0.05, "units_per_meter": 1.0},
        }))
        out = tmp_path / "frames"
        assert run_cli("render", "--config", str(config), "--out", str(out)) == 0
        assert (out / "left.png").exists()
        assert (out / "right.png").exists()
        assert (out / "scene.json").exists()
        depth = read_pfm(out / "gt_depth.pfm")
        assert depth.shape == (96, 96)
        assert np.isfinite(depth).any()


class TestSimulateAndEval:
    def test_simulate_deterministic_and_eval(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "scene": {"seed": 6, "extent": [20.0, 20.0], "cell_size": 0.25,
                      "roughness": 0.0,
                      "boulders": [{"center": [1.6, 0.0, 0.15],
                                    "radii": [0.15, 0.15, 0.15]}],
                      "texture": {"amplitude": 0.45, "scale": 0.4}},
            "rig": {"units_per_meter": 1.0},
            "rover": {"probe_resolution": 64},
            "schedule": {"depth_rate": 0.5, "depth_latency": 1.0},
            "monodepth": {"latency": 1.0, "noise_sigma": 0.05},
            "plan": {"name": "go", "steps": [{"duration_s": 6.0, "left": 1,
                                              "right": 1}]},
        }))
        code = run_cli("simulate", "--config", str(config_path),
                       "--out", str(tmp_path / "runs"), "--run-id", "a")
        assert code == 0
        code = run_cli("simulate", "--config", str(config_path),
                       "--out", str(tmp_path / "runs"), "--run-id", "b")
        assert code == 0
        a = (tmp_path / "runs" / "a" / "events.jsonl").read_bytes()
        b = (tmp_path / "runs" / "b" / "events.jsonl").read_bytes()
        assert a == b

        out = tmp_path / "metrics.json"
        code = run_cli("eval", "--run", str(tmp_path / "runs" / "a"),
                       "--out", str(out))
        assert code == 0
        metrics = json.loads(out.read_text())
        assert metrics["nav"]["completion"] is False  # boulder on the route
        assert metrics["nav"]["halt_count"] == 1
        assert "depth" in metrics
        assert metrics["depth"]["mae_m"] >= 0.0

    def test_simulate_without_plan_exit_1(self, tmp_path):
        code = run_cli("simulate", "--out", str(tmp_path / "runs"))
        assert code == 1

    def test_eval_missing_run_exit_2(self, tmp_path):
        assert run_cli("eval", "--run", str(tmp_path / "nope")) == 2


class TestUsage:
    def test_no_command_exit_1(self, capsys):
        assert run_cli() == 1

    def test_unknown_flag_exit_1(self):
        assert run_cli("trace", "--duration", "1", "--bogus") == 1

    def test_bad_config_exit_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"sgm": {"wrong_key": 1}}))
        assert run_cli("trace", "--duration", "1", "--config", str(bad)) == 1
