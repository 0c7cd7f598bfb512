"""Obstacle-gated driving: the rover executes a straight plan, the safety
gate watches the detection stream, and motion latches to a halt when a
boulder enters the stop range inside the central corridor."""

import tempfile

from deskrover.sim import make_course, run_simulation

with tempfile.TemporaryDirectory() as tmp:
    # a course with one boulder planted on the route
    config, plan = make_course(seed=3, with_obstacle=True)
    boulder = config.scene.boulders[0]
    print(f"boulder at x={boulder.center[0]:.2f} m on the route; "
          f"stop range {config.safety.stop_range} m; "
          f"plan drives {plan.total_duration * config.rover.wheel_speed:.1f} m")

    result = run_simulation(config, plan, out_root=tmp, run_id="demo")
    ex = result.execution
    print(f"\ncompleted: {ex.completed}")
    for h in ex.halt_events:
        print(f"halted at t={h.t:.1f} s: {h.reason}")
    print(f"final position x={ex.final_state.x:.2f} m "
          f"(boulder front face at {boulder.center[0] - boulder.radii[0]:.2f} m)")
    print(f"collisions: {result.collisions}")
    print(f"nav metrics: {result.nav.to_dict()}")

    # the same start with no obstacle completes with zero deviation
    config2, plan2 = make_course(seed=3, with_obstacle=False)
    clean = run_simulation(config2, plan2, out_root=tmp, run_id="control")
    print(f"\ncontrol course: completed={clean.execution.completed}, "
          f"deviation={clean.nav.path_deviation:.2e} m")
    print(f"session log layout under {result.run_dir.name}/: "
          "index.json, events.jsonl, rgb/, depth/")
