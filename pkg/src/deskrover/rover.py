"""Differential-drive rover: bang-bang motor commands, exact arc kinematics,
and the obstacle safety gate that latches a halt.

Motor levels are discrete (-1, 0, +1) per wheel (constant wheel speed, no
proportional control), so WASD keys map one-to-one onto commands.  Kinematic
updates integrate the exact circular arc rather than an Euler step, removing
timestep-dependent drift: straight-line trajectories and spin-reversals
close to within float precision.

The safety gate halts when any detection is both nearer than ``stop_range``
and horizontally inside the central image corridor; the halt latches until
an explicit resume, so autonomy never un-halts itself.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from deskrover.pipeline import PerceptionSnapshot

logger = logging.getLogger(__name__)

_TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(theta + math.pi, _TWO_PI)
    if a <= 0.0:
        a += _TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class MotorCommand:
    left: int
    right: int

    def __post_init__(self):
        if self.left not in (-1, 0, 1) or self.right not in (-1, 0, 1):
            raise ValueError(f"motor levels must be -1, 0 or +1, got {self}")

    @property
    def is_stop(self) -> bool:
        return self.left == 0 and self.right == 0


STOP = MotorCommand(0, 0)

_KEYMAP = {
    "w": MotorCommand(+1, +1),
    "s": MotorCommand(-1, -1),
    "a": MotorCommand(-1, +1),  # spin left in place
    "d": MotorCommand(+1, -1),  # spin right in place
    " ": STOP,
    "space": STOP,
}


def map_key(key: str) -> MotorCommand:
    """WASD (plus space = stop) to a motor command; unknown keys are a
    warned no-op."""
    cmd = _KEYMAP.get(key.lower())
    if cmd is None:
        logger.warning("ignoring unknown teleop key %r", key)
        return STOP
    return cmd


@dataclass(frozen=True)
class RoverParams:
    wheel_speed: float = 0.5   # units/s at level +-1
    track_width: float = 0.3   # units between wheel contact lines

    def __post_init__(self):
        if self.wheel_speed <= 0 or self.track_width <= 0:
            raise ValueError("wheel_speed and track_width must be positive")


@dataclass(frozen=True)
class RoverState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    linear_speed: float = 0.0
    angular_speed: float = 0.0
    halted: bool = False
    halt_reason: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))
        if self.halted and (self.linear_speed != 0.0 or self.angular_speed != 0.0):
            raise ValueError("a halted rover has zero speeds")

    def halt(self, reason: str) -> "RoverState":
        return replace(self, linear_speed=0.0, angular_speed=0.0,
                       halted=True, halt_reason=reason)

    def resume(self) -> "RoverState":
        return replace(self, halted=False, halt_reason=None)


def step(state: RoverState, cmd: MotorCommand, dt: float,
         params: RoverParams) -> RoverState:
    """Advance the pose by one control interval using exact arc integration.

    A halted rover ignores commands (resume first).  With wheel levels l, r:
    v = wheel_speed*(l+r)/2 and omega = wheel_speed*(r-l)/track_width; zero
    omega is a straight-line update, otherwise the pose moves along the
    circular arc of radius v/omega.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.halted:
        return state
    v = params.wheel_speed * (cmd.left + cmd.right) / 2.0
    omega = params.wheel_speed * (cmd.right - cmd.left) / params.track_width
    h = state.heading
    if omega == 0.0:
        x = state.x + v * dt * math.cos(h)
        y = state.y + v * dt * math.sin(h)
        new_h = h
    else:
        radius = v / omega
        new_h = h + omega * dt
        x = state.x + radius * (math.sin(new_h) - math.sin(h))
        y = state.y - radius * (math.cos(new_h) - math.cos(h))
    return replace(state, x=x, y=y, heading=wrap_angle(new_h),
                   linear_speed=v, angular_speed=omega)


@dataclass(frozen=True)
class TimedCommand:
    duration_s: float
    command: MotorCommand

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("command durations must be positive")


@dataclass(frozen=True)
class PathPlan:
    steps: tuple[TimedCommand, ...]
    name: str = "plan"

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def total_duration(self) -> float:
        return sum(s.duration_s for s in self.steps)

    def command_at(self, t: float) -> MotorCommand:
        """Command active at plan time t (last command for t past the end)."""
        acc = 0.0
        for s in self.steps:
            acc += s.duration_s
            if t < acc:
                return s.command
        return self.steps[-1].command if self.steps else STOP

    def to_dict(self) -> dict:
        return {"name": self.name,
                "steps": [{"duration_s": s.duration_s, "left": s.command.left,
                           "right": s.command.right} for s in self.steps]}

    @classmethod
    def from_dict(cls, data: dict) -> "PathPlan":
        steps = tuple(
            TimedCommand(duration_s=float(s["duration_s"]),
                         command=MotorCommand(int(s["left"]), int(s["right"])))
            for s in data["steps"])
        return cls(steps=steps, name=str(data.get("name", "plan")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "PathPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def straight(cls, duration_s: float, name: str = "straight") -> "PathPlan":
        return cls(steps=(TimedCommand(duration_s, MotorCommand(+1, +1)),),
                   name=name)


@dataclass(frozen=True)
class SafetyConfig:
    stop_range: float = 0.5          # meters
    corridor_halfwidth: float = 0.2  # fraction of image width, centered

    def __post_init__(self):
        if self.stop_range <= 0:
            raise ValueError("stop_range must be positive")
        if not 0.0 < self.corridor_halfwidth <= 0.5:
            raise ValueError("corridor_halfwidth must be in (0, 0.5]")


def safety_gate(snapshot: PerceptionSnapshot, config: SafetyConfig,
                image_width_px: float) -> str | None:
    """Halt reason if any detection is directly in the rover's path, else None.

    "Directly in the path" means the detection box center lies within the
    central corridor and its range is below ``stop_range``.
    """
    half = config.corridor_halfwidth * image_width_px
    center = image_width_px / 2.0
    for det in snapshot.detections:
        if det.range_m < config.stop_range and abs(det.center_x() - center) <= half:
            return (f"obstacle at {det.range_m:.2f} m in corridor "
                    f"(confidence {det.confidence:.2f})")
    return None


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    heading: float
    halted: bool

    def to_wire(self) -> dict:
        return {"t": self.t, "x": self.x, "y": self.y,
                "heading": self.heading, "halted": self.halted}


@dataclass(frozen=True)
class HaltEvent:
    t: float
    reason: str


@dataclass(frozen=True)
class ExecutionReport:
    completed: bool
    elapsed: float
    trajectory: tuple[TrajectorySample, ...]
    halt_events: tuple[HaltEvent, ...]
    final_state: RoverState

    def trajectory_jsonl(self) -> str:
        return "".join(json.dumps(s.to_wire()) + "\n" for s in self.trajectory)


def execute_path(plan: PathPlan, loop, safety: SafetyConfig,
                 params: RoverParams, initial_state: RoverState | None = None,
                 control_rate: float | None = None,
                 image_width_px: float = 500.0,
                 on_tick=None) -> ExecutionReport:
    """Run a timed command plan through the perception-gated control loop.

    ``loop`` is a simulated-clock perception coordinator exposing
    ``advance_to(t)`` and ``latest_snapshot()``; the control rate defaults to
    its detection rate so each safety decision consumes one fresh snapshot.
    A halt aborts the plan.  ``on_tick(t, state, snapshot)`` is invoked after
    every control step (mutable-world adapters use it to move the camera).
    """
    if not plan.steps:
        raise ValueError("plan has no steps")
    state = initial_state if initial_state is not None else RoverState()
    rate = control_rate if control_rate is not None else loop.config.detection_rate
    dt_nominal = 1.0 / rate
    total = plan.total_duration

    trajectory = [TrajectorySample(0.0, state.x, state.y, state.heading, state.halted)]
    halt_events: list[HaltEvent] = []
    t = 0.0
    completed = True
    while t < total - 1e-12:
        loop.advance_to(t)
        snapshot = loop.latest_snapshot()
        reason = safety_gate(snapshot, safety, image_width_px)
        if reason is not None and not state.halted:
            state = state.halt(reason)
            halt_events.append(HaltEvent(t=t, reason=reason))
            trajectory.append(TrajectorySample(t, state.x, state.y,
                                               state.heading, True))
            if on_tick is not None:
                on_tick(t, state, snapshot)
            completed = False
            break
        dt = min(dt_nominal, total - t)
        state = step(state, plan.command_at(t), dt, params)
        t += dt
        trajectory.append(TrajectorySample(t, state.x, state.y,
                                           state.heading, state.halted))
        if on_tick is not None:
            on_tick(t, state, snapshot)
    return ExecutionReport(completed=completed, elapsed=t,
                           trajectory=tuple(trajectory),
                           halt_events=tuple(halt_events), final_state=state)
