"""Hybrid perception coordination: a fast detection channel and a slow
asynchronous depth channel publishing staleness-tracked snapshots.

The detection channel fires every ``1/detection_rate`` seconds and publishes
a fresh :class:`PerceptionSnapshot` carrying the latest *ready* depth result.
The depth channel starts a job every ``1/depth_rate`` seconds if idle; a job
becomes visible exactly ``depth_latency`` after capture.  When a cadence tick
finds the worker busy, the ``drop`` policy skips it (frames are sampled, not
queued) while ``queue_one`` remembers at most one request which starts the
moment the running job completes.

Two clocks share these semantics: a discrete-event simulated clock whose
traces are exactly deterministic (same-time events process in the fixed
order depth_ready, detect, depth_start), and a wall clock for live runs
where the fast loop never waits on the depth worker.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from deskrover.detect import Detection
from deskrover.monodepth import MonoDepthResult

DetectFn = Callable[[float], list[Detection]]
DepthFn = Callable[[float], MonoDepthResult]
SnapshotSink = Callable[["PerceptionSnapshot"], None]


@dataclass(frozen=True)
class ScheduleConfig:
    detection_rate: float = 10.0   # Hz
    depth_rate: float = 0.1        # Hz
    depth_latency: float = 7.0     # seconds from capture to visibility
    overlap_policy: str = "drop"   # "drop" | "queue_one"
    clock: str = "simulated"       # "simulated" | "real"

    def __post_init__(self):
        if self.detection_rate <= 0 or self.depth_rate <= 0:
            raise ValueError("rates must be positive")
        if self.depth_latency < 0:
            raise ValueError("depth_latency must be >= 0")
        if self.overlap_policy not in ("drop", "queue_one"):
            raise ValueError(f"unknown overlap_policy {self.overlap_policy!r}")
        if self.clock not in ("simulated", "real"):
            raise ValueError(f"unknown clock {self.clock!r}")

    @property
    def detection_period(self) -> float:
        return 1.0 / self.detection_rate

    @property
    def depth_period(self) -> float:
        return 1.0 / self.depth_rate


@dataclass(frozen=True)
class PerceptionSnapshot:
    """Immutable fusion of the latest detections and latest ready depth."""

    detections: tuple[Detection, ...]
    detections_timestamp: float
    depth: MonoDepthResult | None
    depth_staleness: float | None  # now - depth capture time, None when absent
    seq: int

    @property
    def has_depth(self) -> bool:
        return self.depth is not None


EMPTY_SNAPSHOT = PerceptionSnapshot(detections=(), detections_timestamp=0.0,
                                    depth=None, depth_staleness=None, seq=0)


@dataclass(frozen=True)
class TickEvent:
    t: float
    channel: str  # "detect" | "depth_start" | "depth_ready"
    seq: int


@dataclass
class TickTrace:
    events: list[TickEvent] = field(default_factory=list)

    def of_channel(self, channel: str) -> list[TickEvent]:
        return [e for e in self.events if e.channel == channel]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"t": e.t, "ch": e.channel, "seq": e.seq}) + "\n"
            for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "TickTrace":
        events = []
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            events.append(TickEvent(t=float(rec["t"]), channel=str(rec["ch"]),
                                    seq=int(rec["seq"])))
        return cls(events=events)


# event priorities at equal timestamps: readiness becomes visible first, the
# detect tick consumes it, then a new capture may start
_PRI_READY, _PRI_DETECT, _PRI_START = 0, 1, 2


class PerceptionLoop:
    """Discrete-event perception coordinator under the simulated clock.

    Drive it with :meth:`advance_to` (inclusive) or :meth:`run_until`
    (exclusive end, the "run for a duration" semantics).  Identical configs
    and channel functions yield identical traces.
    """

    def __init__(self, config: ScheduleConfig, detect_fn: DetectFn,
                 depth_fn: DepthFn, snapshot_sink: SnapshotSink | None = None):
        self._config = config
        self._detect_fn = detect_fn
        self._depth_fn = depth_fn
        self._sink = snapshot_sink
        self._snapshot = EMPTY_SNAPSHOT
        self._trace = TickTrace()
        self._tick_index = 0        # next detect tick
        self._cadence_index = 0     # next depth cadence slot
        self._job_count = 0
        self._running: tuple[float, int, MonoDepthResult] | None = None
        self._queued = False
        self._latest_ready: MonoDepthResult | None = None

    @property
    def config(self) -> ScheduleConfig:
        return self._config

    @property
    def trace(self) -> TickTrace:
        return self._trace

    def latest_snapshot(self) -> PerceptionSnapshot:
        return self._snapshot

    def _next_event(self):
        """(t, priority, kind) of the earliest pending event."""
        candidates = []
        if self._running is not None:
            candidates.append((self._running[0], _PRI_READY, "ready"))
        candidates.append((self._tick_index * self._config.detection_period,
                           _PRI_DETECT, "detect"))
        candidates.append((self._cadence_index * self._config.depth_period,
                           _PRI_START, "cadence"))
        return min(candidates)

    def _start_job(self, t: float) -> None:
        self._job_count += 1
        result = self._depth_fn(t)
        self._running = (t + self._config.depth_latency, self._job_count, result)
        self._trace.events.append(TickEvent(t=t, channel="depth_start",
                                            seq=self._job_count))

    def _process(self, t: float, kind: str) -> None:
        if kind == "ready":
            _, job_id, result = self._running
            self._running = None
            self._latest_ready = result
            self._trace.events.append(TickEvent(t=t, channel="depth_ready",
                                                seq=job_id))
            if self._queued:
                self._queued = False
                self._start_job(t)
        elif kind == "detect":
            self._tick_index += 1
            detections = tuple(self._detect_fn(t))
            staleness = None
            if self._latest_ready is not None:
                staleness = t - self._latest_ready.capture_timestamp
            self._snapshot = PerceptionSnapshot(
                detections=detections, detections_timestamp=t,
                depth=self._latest_ready, depth_staleness=staleness,
                seq=self._snapshot.seq + 1)
            self._trace.events.append(TickEvent(t=t, channel="detect",
                                                seq=self._snapshot.seq))
            if self._sink is not None:
                self._sink(self._snapshot)
        else:  # cadence
            self._cadence_index += 1
            if self._running is None:
                self._start_job(t)
            elif self._config.overlap_policy == "queue_one":
                self._queued = True
            # drop policy: the slot is skipped entirely

    def advance_to(self, t: float) -> None:
        """Process every event with timestamp <= t, in deterministic order."""
        while True:
            et, _, kind = self._next_event()
            if et > t:
                return
            self._process(et, kind)

    def run_until(self, duration: float) -> None:
        """Process every event with timestamp strictly below ``duration``."""
        while True:
            et, _, kind = self._next_event()
            if et >= duration:
                return
            self._process(et, kind)


class RealTimePipeline:
    """Wall-clock twin of :class:`PerceptionLoop`.

    One thread drives detection ticks on an absolute schedule (so drift does
    not accumulate) and publishes snapshots; an independent worker thread
    runs depth jobs.  The fast thread never blocks on the worker: it only
    reads the latest published result.  Timestamps in the trace are seconds
    since :meth:`start`.
    """

    def __init__(self, config: ScheduleConfig, detect_fn: DetectFn,
                 depth_fn: DepthFn, snapshot_sink: SnapshotSink | None = None):
        self._config = config
        self._detect_fn = detect_fn
        self._depth_fn = depth_fn
        self._sink = snapshot_sink
        self._snapshot = EMPTY_SNAPSHOT
        self._trace = TickTrace()
        self._trace_lock = threading.Lock()
        self._latest_ready: MonoDepthResult | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._t0 = 0.0

    @property
    def config(self) -> ScheduleConfig:
        return self._config

    @property
    def trace(self) -> TickTrace:
        with self._trace_lock:
            return TickTrace(events=list(self._trace.events))

    def latest_snapshot(self) -> PerceptionSnapshot:
        return self._snapshot

    def now(self) -> float:
        return time.perf_counter() - self._t0

    def _record(self, t: float, channel: str, seq: int) -> None:
        with self._trace_lock:
            self._trace.events.append(TickEvent(t=t, channel=channel, seq=seq))

    def _detect_loop(self) -> None:
        period = self._config.detection_period
        k = 0
        seq = 0
        while not self._stop.is_set():
            target = k * period
            delay = target - self.now()
            if delay > 0 and self._stop.wait(delay):
                return
            t = self.now()
            detections = tuple(self._detect_fn(t))
            ready = self._latest_ready
            staleness = t - ready.capture_timestamp if ready is not None else None
            seq += 1
            self._snapshot = PerceptionSnapshot(
                detections=detections, detections_timestamp=t, depth=ready,
                depth_staleness=staleness, seq=seq)
            self._record(t, "detect", seq)
            if self._sink is not None:
                self._sink(self._snapshot)
            k += 1

    def _depth_loop(self) -> None:
        period = self._config.depth_period
        latency = self._config.depth_latency
        j = 0      # next cadence slot to consider
        jobs = 0
        while not self._stop.is_set():
            # at the top of each iteration the worker is idle: `now` is the
            # thread start (first pass) or the previous job's completion
            now = self.now()
            if jobs == 0:
                target = 0.0  # the t=0 slot fires immediately, however late
                j = 1
            elif (self._config.overlap_policy == "queue_one"
                    and j * period < now - 1e-9):
                # a slot elapsed while busy: the queued request starts now
                target = now
                j = int((now - 1e-9) / period) + 1
            else:
                while j * period < now - 1e-9:  # drop slots missed while busy
                    j += 1
                target = j * period
                j += 1
            delay = target - self.now()
            if delay > 0 and self._stop.wait(delay):
                return
            capture = self.now()
            jobs += 1
            self._record(capture, "depth_start", jobs)
            result = self._depth_fn(capture)
            remaining = (capture + latency) - self.now()
            if remaining > 0 and self._stop.wait(remaining):
                return
            self._latest_ready = result
            self._record(self.now(), "depth_ready", jobs)

    def start(self) -> None:
        self._t0 = time.perf_counter()
        self._threads = [
            threading.Thread(target=self._detect_loop, daemon=True, name="detect"),
            threading.Thread(target=self._depth_loop, daemon=True, name="depth"),
        ]
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=5.0)


def run(config: ScheduleConfig, duration: float, detect_fn: DetectFn,
        depth_fn: DepthFn, snapshot_sink: SnapshotSink | None = None) -> TickTrace:
    """Run the perception loop for ``duration`` seconds and return its trace."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    if config.clock == "simulated":
        loop = PerceptionLoop(config, detect_fn, depth_fn, snapshot_sink)
        loop.run_until(duration)
        return loop.trace
    pipeline = RealTimePipeline(config, detect_fn, depth_fn, snapshot_sink)
    pipeline.start()
    try:
        time.sleep(duration)
    finally:
        pipeline.stop()
    trace = pipeline.trace
    trace.events = [e for e in trace.events if e.t < duration]
    return trace
