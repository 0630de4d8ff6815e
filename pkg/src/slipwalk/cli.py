"""Command line entry points: run a scenario to CSV, benchmark the
planners, or run the standing whole-body-control demo.

Exit codes: 0 success, 2 the robot fell, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from .horizontal import FootstepPlanner, HorizontalParams, HorizontalState
from .scenario import ScenarioError, emit_scenario, parse_scenario
from .simulate import COLUMNS, Scenario, run_scenario, summarize
from .vertical import VerticalParams, VerticalPlanner, VerticalState
from . import wbc

log = logging.getLogger("slipwalk")

EXIT_OK = 0
EXIT_FALL = 2
EXIT_CONFIG = 3


def _setup_logging():
    level = os.environ.get("SLIPWALK_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def write_csv(log_obj, path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(log_obj.columns)
        for row in log_obj.rows:
            writer.writerow(
                [f"{v:.9g}" if isinstance(v, float) else v for v in row]
            )


def cmd_run(args) -> int:
    try:
        if args.scenario:
            with open(args.scenario) as fh:
                scenario = parse_scenario(fh.read())
        else:
            scenario = parse_scenario("{}")
    except (OSError, ScenarioError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_scenario(scenario)
    if args.out:
        write_csv(result, args.out)
    summary = summarize(result, scenario)
    for key, value in summary.items():
        print(f"{key}: {value}")
    return EXIT_FALL if result.outcome == "fall" else EXIT_OK


def bench_planner(iterations: int = 200) -> dict:
    """Latency percentiles for one full planning tick (vertical + both
    horizontal axes), cold (fresh planners, no warm start) and warm."""
    vp = VerticalParams()
    hp = HorizontalParams()
    rng = np.random.default_rng(7)

    def tick(vplanner, fplanner, phase_time):
        z = 0.715 + rng.normal(0, 0.01)
        vplanner.plan(VerticalState(z=z, z_dot=rng.normal(0, 0.05)), phase_time)
        fplanner.plan(
            HorizontalState(rng.normal(0, 0.05), 0.3 + rng.normal(0, 0.05)),
            HorizontalState(rng.normal(0, 0.03), rng.normal(0, 0.1)),
            (0.0, 0.15, 0),
            phase_time,
        )

    cold = []
    for _ in range(iterations):
        vplanner, fplanner = VerticalPlanner(vp), FootstepPlanner(hp)
        t0 = time.perf_counter()
        tick(vplanner, fplanner, 0.0)
        cold.append(time.perf_counter() - t0)

    vplanner, fplanner = VerticalPlanner(vp), FootstepPlanner(hp)
    # populate matrix caches for every phase before timing
    for k in range(vp.samples_per_step + 1):
        vplanner.plan(VerticalState(z=0.715, z_dot=0.0), k * vp.sample_time)
    for k in range(hp.samples_per_step + 1):
        fplanner.plan(
            HorizontalState(0.0, 0.3),
            HorizontalState(0.0, 0.0),
            (0.0, 0.15, 0),
            k * hp.sample_time,
        )
    warm = []
    step = vp.step_duration
    for i in range(iterations):
        t0 = time.perf_counter()
        tick(vplanner, fplanner, (i * 0.013) % step)
        warm.append(time.perf_counter() - t0)

    out = {}
    for name, samples in (("cold", cold), ("warm", warm)):
        arr = np.sort(np.array(samples)) * 1e3
        for p in (50, 95, 99):
            out[f"{name}_p{p}_ms"] = float(np.percentile(arr, p))
    return out


def cmd_bench(args) -> int:
    stats = bench_planner(args.iters)
    for key, value in stats.items():
        print(f"{key}: {value:.4f}")
    return EXIT_OK


def run_wbc_demo(duration: float = 1.0, dt: float = 1e-3) -> dict:
    """Double-support standing demo on the planar model: hold the pelvis at a
    slightly lower height with zero pitch, integrating the QP accelerations."""
    q = np.array([0.0, 0.8, 0.0, 0.0, 0.8, 0.0, 0.8])
    q_dot = np.zeros(7)
    target = np.array([0.0, 0.75])
    solver = None
    forces_last = np.zeros(4)
    tau_max = 0.0
    for _ in range(int(round(duration / dt))):
        model = wbc.planar_slider_model(q, q_dot)
        base_task = wbc.Task(
            jacobian=np.eye(2, 7),
            jdot_qdot=np.zeros(2),
            command=wbc.linear_task_command(
                target, q[:2], np.zeros(2), q_dot[:2], np.zeros(2), 100.0, 20.0
            ),
            weight=1.0,
        )
        pitch_task = wbc.Task(
            jacobian=np.eye(7)[2:3],
            jdot_qdot=np.zeros(1),
            command=np.array([50.0 * (0.0 - q[2]) + 10.0 * (0.0 - q_dot[2])]),
            weight=1.0,
        )
        contact_task = wbc.Task(
            jacobian=model.contact_jacobians,
            jdot_qdot=model.contact_jdot_qdot,
            command=np.zeros(4),
            weight=1e4,
        )
        problem = wbc.WbcProblem(model=model, tasks=[base_task, pitch_task, contact_task])
        qdd, forces, tau, _ = wbc.solve_wbc(problem, solver)
        forces_last = forces
        tau_max = max(tau_max, float(np.max(np.abs(tau))))
        q_dot = q_dot + dt * qdd
        q = q + dt * q_dot
    return {
        "base_x": float(q[0]),
        "base_z": float(q[1]),
        "pitch": float(q[2]),
        "height_error": float(abs(q[1] - target[1])),
        "vertical_force_sum": float(forces_last[1] + forces_last[3]),
        "max_torque": tau_max,
    }


def cmd_wbc_demo(args) -> int:
    stats = run_wbc_demo()
    for key, value in stats.items():
        print(f"{key}: {value:.6f}")
    return EXIT_OK


def cmd_emit(args) -> int:
    """Print the fully defaulted scenario document (useful as a template)."""
    print(emit_scenario(parse_scenario("{}")))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="slipwalk")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a walking scenario")
    p_run.add_argument("--scenario", help="scenario JSON path (default: flat walk)")
    p_run.add_argument("--out", help="CSV log output path")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="benchmark planner latency")
    p_bench.add_argument("--iters", type=int, default=200)
    p_bench.set_defaults(func=cmd_bench)

    p_wbc = sub.add_parser("wbc-demo", help="standing whole-body control demo")
    p_wbc.set_defaults(func=cmd_wbc_demo)

    p_emit = sub.add_parser("template", help="print a default scenario document")
    p_emit.set_defaults(func=cmd_emit)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
