import json
import time
from pathlib import Path

import jsonschema
import pytest
from fastapi.testclient import TestClient

from deskrover.config import load_config
from deskrover.service import (
    LOSSY_BACKLOG,
    ClientSession,
    RoverService,
    build_app,
    colorize_depth,
)

SCHEMA = json.loads(
    (Path(__file__).resolve().parents[1] / "protocol" / "wire-schema.json")
    .read_text())


def service_config(boulder_x=None):
    boulders = []
    if boulder_x is not None:
        boulders = [{"center": [boulder_x, 0.0, 0.15],
                     "radii": [0.15, 0.15, 0.15]}]
    return load_config({
        "scene": {"seed": 5, "extent": [20.0, 20.0], "cell_size": 0.25,
                  "roughness": 0.0, "boulders": boulders,
                  "texture": {"amplitude": 0.45, "scale": 0.4}},
        "rig": {"units_per_meter": 1.0},
        "rover": {"probe_resolution": 48, "camera_height": 0.25,
                  "camera_pitch_deg": 12.0},
        "schedule": {"detection_rate": 20.0, "depth_rate": 2.0,
                     "depth_latency": 0.2, "clock": "real"},
        "server": {"live_render_px": 64, "frame_rate_limit": 5.0,
                   "telemetry_period": 0.25},
    })


class Wire:
    """Client-side envelope helper tracking outbound seq."""

    def __init__(self, ws):
        self.ws = ws
        self.seq = 0
        self.t0 = time.perf_counter()

    def send(self, msg_type, payload):
        self.seq += 1
        self.ws.send_text(json.dumps({
            "type": msg_type, "seq": self.seq,
            "ts": time.perf_counter() - self.t0, "payload": payload}))

    def recv(self):
        return json.loads(self.ws.receive_text())

    def wait_for(self, msg_type, limit=400, predicate=None):
        """Scan incoming messages until one matches; fail after `limit`."""
        for _ in range(limit):
            msg = self.recv()
            if msg["type"] == msg_type and (predicate is None or predicate(msg)):
                return msg
        raise AssertionError(f"no {msg_type!r} within {limit} messages")


@pytest.fixture
def client_free():
    app = build_app(RoverService(service_config()))
    with TestClient(app) as client:
        yield client


class TestProtocol:
    def test_hello_first_and_valid(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            msg = wire.recv()
            assert msg["type"] == "hello"
            jsonschema.validate(msg, SCHEMA)
            assert msg["payload"]["coord_width"] == 500

    def test_server_messages_validate_and_seq_increases(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            seen = {}
            last_seq = 0
            deadline = time.time() + 4.0
            want = {"hello", "pose", "detections", "snapshot_meta", "frame",
                    "telemetry", "depth"}
            while time.time() < deadline and not want <= set(seen):
                msg = wire.recv()
                jsonschema.validate(msg, SCHEMA)
                assert msg["seq"] == last_seq + 1
                last_seq = msg["seq"]
                seen.setdefault(msg["type"], msg)
            assert want <= set(seen), f"missing: {want - set(seen)}"
            depth = seen["depth"]["payload"]
            assert depth["min_m"] <= depth["max_m"]

    def test_malformed_message_keeps_session_open(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            ws.send_text("this is not json")
            err = wire.wait_for("error")
            assert err["payload"]["code"] == "malformed"
            wire.send("resume", {})  # session still works
            err2 = wire.wait_for("error")
            assert err2["payload"]["code"] == "not_halted"

    def test_client_seq_must_increase(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            wire.send("resume", {})
            wire.wait_for("error", predicate=lambda m: m["payload"]["code"] == "not_halted")
            wire.seq = 0  # replay an old seq
            wire.send("resume", {})
            err = wire.wait_for("error")
            assert err["payload"]["code"] == "bad_seq"


class TestTeleop:
    def test_w_round_trip_under_100ms(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            wire.wait_for("pose")  # service warm
            x0 = None
            sent_at = time.perf_counter()
            wire.send("cmd", {"key": "w"})
            pose = wire.wait_for(
                "pose", predicate=lambda m: m["payload"]["x"] > 1e-6)
            elapsed = time.perf_counter() - sent_at
            assert pose["payload"]["x"] > 0.0
            assert elapsed < 0.1, f"round trip took {elapsed*1e3:.0f} ms"

    def test_resume_without_halt_is_error(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            wire.send("resume", {})
            err = wire.wait_for("error")
            assert err["payload"]["code"] == "not_halted"

    def test_unknown_path_name_is_error(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            wire.send("path_load", {"name": "grand-tour"})
            err = wire.wait_for("error")
            assert err["payload"]["code"] == "unknown_path"

    def test_inline_path_load_drives_rover(self, client_free):
        with client_free.websocket_connect("/ws") as ws:
            wire = Wire(ws)
            wire.wait_for("pose")
            wire.send("path_load", {"plan": {
                "name": "nudge",
                "steps": [{"duration_s": 0.4, "left": 1, "right": 1}]}})
            pose = wire.wait_for(
                "pose", predicate=lambda m: m["payload"]["x"] > 0.05, limit=800)
            assert pose["payload"]["x"] > 0.05


class TestHaltFlow:
    def test_drive_into_boulder_halts_then_resume(self):
        app = build_app(RoverService(service_config(boulder_x=0.8)))
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                wire = Wire(ws)
                wire.wait_for("pose")
                # hold 'w' by refreshing the command; the gate fires when the
                # boulder's median range drops below stop_range
                halt = None
                for _ in range(40):
                    wire.send("cmd", {"key": "w"})
                    deadline = time.time() + 0.25
                    while time.time() < deadline:
                        msg = wire.recv()
                        if msg["type"] == "halt_event":
                            halt = msg
                            break
                    if halt:
                        break
                assert halt is not None, "no halt_event while driving at a boulder"
                jsonschema.validate(halt, SCHEMA)

                # movement is suppressed while halted
                wire.send("cmd", {"key": "w"})
                err = wire.wait_for("error")
                assert err["payload"]["code"] == "halted"
                pose = wire.wait_for("pose")
                assert pose["payload"]["halted"] is True

                wire.send("resume", {})
                pose = wire.wait_for(
                    "pose", predicate=lambda m: m["payload"]["halted"] is False)
                assert pose["payload"]["halt_reason"] is None


class TestClientSession:
    def test_lossy_drops_oldest_critical_kept(self):
        session = ClientSession(1)
        for i in range(LOSSY_BACKLOG + 5):
            session.push("frame", float(i), {"n": i}, lossy=True)
        session.push("pose", 99.0, {"x": 0.0}, lossy=False)
        out = []
        while True:
            msg = session.next_message(timeout=0.01)
            if msg is None:
                break
            out.append(json.loads(msg))
        kinds = [m["type"] for m in out]
        assert kinds[0] == "pose"  # critical drains first
        frames = [m["payload"]["n"] for m in out if m["type"] == "frame"]
        assert len(frames) == LOSSY_BACKLOG
        assert frames[-1] == LOSSY_BACKLOG + 4  # newest kept, oldest dropped
        seqs = [m["seq"] for m in out]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)


class TestWireRoundTrip:
    def test_serialize_parse_identity(self):
        """JSON round trip of every message shape is the identity."""
        envelopes = [
            {"type": "hello", "seq": 1, "ts": 0.5,
             "payload": {"server": "deskrover", "coord_width": 500,
                         "coord_height": 500, "detection_rate": 10.0}},
            {"type": "cmd", "seq": 2, "ts": 1.0, "payload": {"key": "w"}},
            {"type": "path_load", "seq": 3, "ts": 1.5,
             "payload": {"plan": {"name": "p", "steps": [
                 {"duration_s": 1.0, "left": 1, "right": 1}]}}},
            {"type": "resume", "seq": 4, "ts": 2.0, "payload": {}},
            {"type": "halt_event", "seq": 5, "ts": 2.5,
             "payload": {"reason": "rock", "t": 2.4}},
            {"type": "pose", "seq": 6, "ts": 3.0,
             "payload": {"x": 0.25, "y": -1.5, "heading": 0.1,
                         "halted": False, "halt_reason": None}},
            {"type": "error", "seq": 7, "ts": 3.5,
             "payload": {"code": "bad_seq", "message": "nope"}},
        ]
        for env in envelopes:
            jsonschema.validate(env, SCHEMA)
            assert json.loads(json.dumps(env)) == env


class TestColorize:
    def test_invalid_black_and_range(self):
        import numpy as np
        values = np.array([[0.5, 2.0], [1.0, -1.0]], dtype=np.float32)
        valid = np.array([[True, True], [True, False]])
        rgb, lo, hi = colorize_depth(values, valid)
        assert (lo, hi) == (0.5, 2.0)
        assert rgb.shape == (2, 2, 3)
        assert tuple(rgb[1, 1]) == (0, 0, 0)
        assert tuple(rgb[0, 0]) != tuple(rgb[0, 1])  # near vs far differ
