"""Command-line entry points for every workflow.

Subcommands: render (scene -> stereo frames + ground truth), match (stereo
pair -> disparity/depth PFM), simulate (headless run -> session log +
reports), eval (run directory -> metric JSON), trace (scheduler trace), and
serve (live teleop service).  Exit codes: 0 success, 1 validation error,
2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(1, f"error: {message}")


class SystemExit_(Exception):
    def __init__(self, code, message=""):
        self.code = code
        self.message = message


def _build_parser() -> _Parser:
    parser = _Parser(prog="deskrover",
                     description="Desk-scale stereo rover perception toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_render = sub.add_parser("render", parents=[], help="render a stereo pair with ground truth")
    p_render.add_argument("--config", help="app config JSON")
    p_render.add_argument("--scene", help="scene JSON file (overrides config scene)")
    p_render.add_argument("--out", required=True, help="output directory")
    p_render.add_argument("--x", type=float, default=0.0)
    p_render.add_argument("--y", type=float, default=0.0)
    p_render.add_argument("--z", type=float, help="camera height; default mount height above terrain")
    p_render.add_argument("--yaw", type=float, default=0.0, help="radians")
    p_render.add_argument("--pitch-deg", type=float, help="downward pitch; default mount pitch")
    p_render.add_argument("--timestamp", type=float, default=0.0)

    p_match = sub.add_parser("match", help="stereo pair -> disparity (and depth) PFM")
    p_match.add_argument("--left", required=True)
    p_match.add_argument("--right", required=True)
    p_match.add_argument("--out", required=True, help="disparity PFM path")
    p_match.add_argument("--depth-out", help="also write metric-free depth PFM (needs focal/baseline)")
    p_match.add_argument("--config", help="app config JSON (rig + sgm sections)")
    p_match.add_argument("--focal", type=float, help="focal length px (with --depth-out)")
    p_match.add_argument("--baseline", type=float, help="baseline, scene units (with --depth-out)")
    p_match.add_argument("--num-disparities", type=int)
    p_match.add_argument("--census-window", type=int, nargs=2, metavar=("W", "H"))
    p_match.add_argument("--p1", type=int)
    p_match.add_argument("--p2", type=int)
    p_match.add_argument("--num-paths", type=int, choices=(4, 8))
    p_match.add_argument("--uniqueness-ratio", type=float)
    p_match.add_argument("--lr-max-diff", type=float)
    p_match.add_argument("--speckle-window", type=int)
    p_match.add_argument("--speckle-range", type=float)

    p_sim = sub.add_parser("simulate", help="headless plan execution -> session log")
    p_sim.add_argument("--config", help="app config JSON")
    p_sim.add_argument("--plan", help="path plan JSON (default: config plan)")
    p_sim.add_argument("--out", required=True, help="runs root directory")
    p_sim.add_argument("--run-id", help="run directory name (default from config)")
    p_sim.add_argument("--frames-every", type=float, default=0.0,
                       help="log a rendered frame every N sim seconds (0 = off)")

    p_eval = sub.add_parser("eval", help="run directory -> depth + nav metrics JSON")
    p_eval.add_argument("--run", required=True, help="session run directory")
    p_eval.add_argument("--band", type=float, nargs=2, default=(0.15, 2.0),
                        metavar=("MIN_M", "MAX_M"))
    p_eval.add_argument("--out", help="write JSON here instead of stdout")

    p_trace = sub.add_parser("trace", help="deterministic scheduler trace -> JSONL")
    p_trace.add_argument("--config", help="app config JSON (schedule section)")
    p_trace.add_argument("--duration", type=float, required=True)
    p_trace.add_argument("--out", help="write JSONL here instead of stdout")

    p_serve = sub.add_parser("serve", help="live teleop service (WebSocket)")
    p_serve.add_argument("--config", help="app config JSON")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)

    return parser


def _load_app_config(path: str | None):
    from deskrover.config import AppConfig, load_config_file

    if path is None:
        return AppConfig.defaults()
    return load_config_file(path)


def _cmd_render(args) -> int:
    from deskrover.config import load_config
    from deskrover.formats import write_pfm, write_png
    from deskrover.scene import CameraPose, load_scene, render_stereo, save_scene

    config = _load_app_config(args.config)
    scene = load_scene(args.scene) if args.scene else config.scene
    if args.z is not None:
        z = args.z
    else:
        z = float(scene.terrain.height_at(args.x, args.y)) + config.mount.camera_height
    pitch = math.radians(args.pitch_deg if args.pitch_deg is not None
                         else config.mount.camera_pitch_deg)
    pose = CameraPose(position=np.array([args.x, args.y, z]), yaw=args.yaw,
                      pitch=pitch)
    frame = render_stereo(scene, config.rig, pose, timestamp=args.timestamp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / "left.png", frame.left)
    write_png(out / "right.png", frame.right)
    write_pfm(out / "gt_depth.pfm", frame.gt_depth_left)
    save_scene(scene, out / "scene.json")
    print(f"wrote {out}/left.png right.png gt_depth.pfm scene.json")
    return 0


def _cmd_match(args) -> int:
    from dataclasses import replace

    from deskrover.formats import read_png_gray, write_pfm
    from deskrover.stereo import INVALID, match_pair

    config = _load_app_config(args.config)
    params = config.sgm
    overrides = {
        "num_disparities": args.num_disparities,
        "census_window": tuple(args.census_window) if args.census_window else None,
        "p1": args.p1, "p2": args.p2, "num_paths": args.num_paths,
        "uniqueness_ratio": args.uniqueness_ratio,
        "lr_max_diff": args.lr_max_diff,
        "speckle_window": args.speckle_window,
        "speckle_range": args.speckle_range,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        params = replace(params, **overrides)

    left = read_png_gray(args.left)
    right = read_png_gray(args.right)
    if left.shape != right.shape:
        raise ValueError(f"image sizes differ: {left.shape} vs {right.shape}")
    disp = match_pair(left, right, params)
    write_pfm(args.out, disp.values)
    valid_pct = 100.0 * float(disp.valid.mean())
    print(f"wrote {args.out} ({valid_pct:.1f}% valid)")

    if args.depth_out:
        focal = args.focal if args.focal is not None else config.rig.intrinsics.focal_px
        baseline = args.baseline if args.baseline is not None else config.rig.baseline
        positive = disp.valid & (disp.values > 0)
        with np.errstate(divide="ignore"):
            depth = np.where(positive, focal * baseline / disp.values, INVALID)
        write_pfm(args.depth_out, depth.astype(np.float32))
        print(f"wrote {args.depth_out} (f={focal:.2f}, B={baseline})")
    return 0


def _cmd_simulate(args) -> int:
    from deskrover.rover import PathPlan
    from deskrover.sim import run_simulation

    config = _load_app_config(args.config)
    if args.plan:
        plan = PathPlan.load(args.plan)
    elif config.plan is not None:
        plan = config.plan
    else:
        raise ValueError("no plan: pass --plan or a 'plan' config section")
    result = run_simulation(config, plan, out_root=args.out, run_id=args.run_id,
                            log_frames_every=args.frames_every)
    nav = result.nav
    print(f"run dir: {result.run_dir}")
    print(f"completed: {nav.completion}  time: {nav.time_s:.2f}s  "
          f"deviation: {nav.path_deviation:.4f}  halts: {nav.halt_count}  "
          f"collisions: {result.collisions}")
    return 0


def _cmd_eval(args) -> int:
    from deskrover.evaluation import SessionReader, depth_mae, nav_metrics
    from deskrover.formats import read_pfm
    from deskrover.stereo import DepthMap

    reader = SessionReader(args.run)
    result: dict = {"run_id": reader.run_id}

    reports_path = Path(args.run) / "reports.json"
    if reports_path.exists():
        reports = json.loads(reports_path.read_text())
        intended = np.asarray(reports["intended"], dtype=float)
        replay = reader.replay_execution()
        result["nav"] = nav_metrics(replay, intended).to_dict()

    pairs = reader.depth_pairs()
    if pairs:
        est_list, gt_list = [], []
        for _, est_path, gt_path in pairs:
            est_list.append(read_pfm(est_path))
            gt_list.append(read_pfm(gt_path))
        est = np.concatenate([a.ravel() for a in est_list])[None, :]
        gt = np.concatenate([a.ravel() for a in gt_list])[None, :]
        est_map = DepthMap(values=est, valid=np.isfinite(est) & (est > 0))
        gt_map = DepthMap(values=gt, valid=np.isfinite(gt) & (gt > 0))
        result["depth"] = depth_mae(est_map, gt_map,
                                    band=tuple(args.band)).to_dict()

    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_trace(args) -> int:
    from deskrover.monodepth import MonoDepthResult
    from deskrover.pipeline import run as run_pipeline
    from deskrover.stereo import DepthMap

    config = _load_app_config(args.config)
    schedule = config.schedule

    def stub_depth(t: float) -> MonoDepthResult:
        values = np.zeros((1, 1), dtype=np.float32)
        return MonoDepthResult(
            depth=DepthMap(values=values, valid=np.ones((1, 1), bool)),
            capture_timestamp=t, ready_timestamp=t + schedule.depth_latency,
            backend_id="stub")

    trace = run_pipeline(schedule, args.duration, lambda t: [], stub_depth)
    text = trace.to_jsonl()
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({len(trace.events)} events)")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args) -> int:
    from dataclasses import replace

    from deskrover.service import serve

    config = _load_app_config(args.config)
    server = config.server
    if args.host:
        server = replace(server, host=args.host)
    if args.port:
        server = replace(server, port=args.port)
    config = replace(config, server=server)
    serve(config)
    return 0


_COMMANDS = {
    "render": _cmd_render,
    "match": _cmd_match,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
    "trace": _cmd_trace,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    if args.command is None:
        parser.print_help()
        return 1
    from deskrover.config import ConfigError

    try:
        return _COMMANDS[args.command](args)
    except SystemExit_ as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
