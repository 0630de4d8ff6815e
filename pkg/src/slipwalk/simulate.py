"""Closed-loop reduced-order walking simulator.

Integrates the decoupled spring/LIP CoM dynamics at 1 kHz under the MPC
planners, flies the swing foot along quintic references, detects blind
touchdowns against the terrain (including early/late contact and toe-stub
failures on stair risers), applies push forces, and records a uniform
1 kHz log.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .horizontal import FootstepPlanner, HorizontalParams, HorizontalState
from .swing import ClockEvent, GaitClock, advance_clock, swing_foot_ref
from .terrain import TerrainError, TerrainProfile, build_profile, Flat
from .vertical import VerticalParams, VerticalPlanner, VerticalState

SIM_DT = 1e-3


@dataclass(frozen=True)
class PushEvent:
    start: float
    duration: float
    force: tuple[float, float, float]

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("push duration must be positive")

    def active(self, t: float) -> bool:
        return self.start <= t < self.start + self.duration


@dataclass
class GaitParams:
    step_duration: float = 0.7
    foot_height: float = 0.05
    swing_offset: float | None = None  # fixed CoM-to-landing offset override
    # descent after a missed touchdown: slow enough to be physical, fast
    # enough that a single-support phase stretched by a low landing does not
    # let the pendulum diverge before contact
    late_drop_rate: float = 1.0
    descend_rate: float = 2.0  # swing-foot speed at the blind landing height
    stub_jump: float = 0.005  # terrain jump treated as a riser face
    fall_height: float = 0.3  # minimum CoM height above stance
    fall_offset: float = 0.8  # maximum horizontal CoM-to-stance distance
    # blind landing-height estimation: extrapolate the slope measured between
    # the last two stance feet, and aim slightly above it so timing errors
    # land on the late side (late contact adapts, early contact cannot)
    landing_bias: float = 0.0075
    max_slope_estimate: float = 0.45  # cap on the extrapolated rise per meter


@dataclass
class Scenario:
    terrain: TerrainProfile
    velocity: tuple[float, float] = (0.3, 0.0)
    duration: float = 10.0
    pushes: tuple[PushEvent, ...] = ()
    vertical: VerticalParams = field(default_factory=VerticalParams)
    horizontal: HorizontalParams = field(default_factory=HorizontalParams)
    gait: GaitParams = field(default_factory=GaitParams)
    seed: int = 0
    planner_decimation: int = 1

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        for push in self.pushes:
            if not (0.0 <= push.start <= self.duration):
                raise ValueError("pushes must start within [0, duration]")


COLUMNS = [
    "t",
    "com_x",
    "com_y",
    "com_z",
    "vel_x",
    "vel_y",
    "vel_z",
    "z_ref",
    "r",
    "stance_side",
    "stance_x",
    "stance_y",
    "stance_z",
    "swing_x",
    "swing_y",
    "swing_z",
    "planned_step1_x",
    "planned_step1_y",
    "push_fx",
    "push_fy",
    "push_fz",
    "event",
]


@dataclass
class SimLog:
    columns: list[str]
    rows: list[list]
    events: list[tuple[float, str]]
    step_times: list[float]  # times of support exchanges
    planner_latency: list[float]
    outcome: str  # "completed" | "fall" | "boundary"

    def array(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)


class FallError(RuntimeError):
    pass


def step_dynamics(
    com: np.ndarray,
    vel: np.ndarray,
    stance: np.ndarray,
    r_height: float,
    omega_x: float,
    omega_z: float,
    mass: float,
    force: tuple[float, float, float],
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One RK4 step of the decoupled CoM dynamics (world frame).

    Horizontal: LIP about the stance point.  Vertical: linear spring about
    the reference equilibrium height ``r_height`` above the stance contact.
    Pushes act at the CoM.
    """
    fx, fy, fz = force
    ax_f, ay_f, az_f = fx / mass, fy / mass, fz / mass
    px, py, pz = stance
    wx2, wz2 = omega_x**2, omega_z**2

    def accel(pos, v):
        return np.array(
            [
                wx2 * (pos[0] - px) + ax_f,
                wx2 * (pos[1] - py) + ay_f,
                -wz2 * (pos[2] - pz - r_height) + az_f,
            ]
        )

    k1v = accel(com, vel)
    k1x = vel
    k2v = accel(com + 0.5 * dt * k1x, vel + 0.5 * dt * k1v)
    k2x = vel + 0.5 * dt * k1v
    k3v = accel(com + 0.5 * dt * k2x, vel + 0.5 * dt * k2v)
    k3x = vel + 0.5 * dt * k2v
    k4v = accel(com + dt * k3x, vel + dt * k3v)
    k4x = vel + dt * k3v
    new_com = com + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    new_vel = vel + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if not (np.all(np.isfinite(new_com)) and np.all(np.isfinite(new_vel))):
        raise FallError("non-finite state during integration")
    return new_com, new_vel


def detect_touchdown(swing_pos, terrain: TerrainProfile):
    """Contact point if the swing foot is at or below the terrain, else None."""
    h = terrain.height_at(swing_pos[0], swing_pos[1])
    if swing_pos[2] <= h + 1e-12:
        return np.array([swing_pos[0], swing_pos[1], h])
    return None


def _lateral_cycle_velocity(step_width: float, omega: float, duration: float) -> float:
    return step_width * omega * math.tanh(omega * duration / 2.0)


def _sagittal_cycle(vx: float, omega: float, duration: float) -> tuple[float, float]:
    """(offset behind stance, exchange velocity) of the steady LIP cycle."""
    if vx == 0.0:
        return 0.0, 0.0
    c = math.cosh(omega * duration)
    s = math.sinh(omega * duration)
    lam = vx * duration / 2.0
    v0 = lam * omega * s / (c - 1.0)
    return lam, v0


def run_scenario(scenario: Scenario) -> SimLog:
    """Run the full 1 kHz closed loop and return the log."""
    terr = scenario.terrain
    vp = scenario.vertical
    hp = scenario.horizontal
    gait = scenario.gait
    vx_cmd, vy_cmd = scenario.velocity
    if hp.desired_velocity != scenario.velocity:
        hp = replace(hp, desired_velocity=scenario.velocity)

    vplanner = VerticalPlanner(vp)
    fplanner = FootstepPlanner(hp)

    # start on the flat lead-in, near the steady LIP cycle
    d_w = hp.step_width
    stance = np.array([0.0, d_w, terr.height_at(0.0, d_w)])
    support_flag = 0  # left
    lam, v0x = _sagittal_cycle(vx_cmd, hp.omega, hp.step_duration)
    v0y = _lateral_cycle_velocity(d_w, hp.omega, hp.step_duration)
    com = np.array([stance[0] - lam, 0.0, stance[2] + vp.rest_length])
    vel = np.array([v0x, v0y, 0.0])

    clock = GaitClock(step_duration=gait.step_duration, support_flag=support_flag)
    swing = np.array([0.0, -d_w, terr.height_at(0.0, -d_w)])
    swing_start = swing.copy()
    com_z_step_start = com[2]
    vplanner.set_step_start(com[2] - stance[2], vel[2])

    # direction of travel for the foothold-history slope estimate
    speed_cmd = math.hypot(vx_cmd, vy_cmd)
    if speed_cmd > 1e-9:
        u_cmd = np.array([vx_cmd, vy_cmd]) / speed_cmd
    else:
        u_cmd = np.array([1.0, 0.0])
    prev_stance = swing.copy()
    slope_est = 0.0

    n_ticks = int(round(scenario.duration / SIM_DT))
    rows: list[list] = []
    events: list[tuple[float, str]] = []
    step_times: list[float] = []
    latencies: list[float] = []
    outcome = "completed"

    fail_streak = 0
    plan_x = plan_y = None
    vplan = None
    push_prev = (0.0, 0.0, 0.0)

    try:
        for tick in range(n_ticks):
            t = tick * SIM_DT
            force = [0.0, 0.0, 0.0]
            for push in scenario.pushes:
                if push.active(t):
                    force[0] += push.force[0]
                    force[1] += push.force[1]
                    force[2] += push.force[2]
            force = tuple(force)
            if force != (0.0, 0.0, 0.0) and push_prev == (0.0, 0.0, 0.0):
                events.append((t, "push_start"))
            if force == (0.0, 0.0, 0.0) and push_prev != (0.0, 0.0, 0.0):
                events.append((t, "push_end"))
            push_prev = force

            tick_event = ""
            z_rel = com[2] - stance[2]
            if z_rel < gait.fall_height:
                raise FallError("CoM height collapsed")
            if math.hypot(com[0] - stance[0], com[1] - stance[1]) > gait.fall_offset:
                raise FallError("CoM ran away from the stance foot")

            # planners
            if tick % scenario.planner_decimation == 0:
                t0 = time.perf_counter()
                vplan = vplanner.plan(VerticalState(z=z_rel, z_dot=vel[2]), clock.phase_time)
                plan_x, plan_y = fplanner.plan(
                    HorizontalState(com[0], vel[0]),
                    HorizontalState(com[1], vel[1]),
                    (stance[0], stance[1], clock.support_flag),
                    clock.phase_time,
                )
                latencies.append(time.perf_counter() - t0)
                if plan_x.relaxed or plan_y.relaxed:
                    tick_event = "planner_relaxed"
                if plan_x.failed or plan_y.failed:
                    fail_streak += 1
                    tick_event = "planner_failure"
                    if fail_streak >= 2:
                        raise FallError("repeated reachability failure")
                else:
                    fail_streak = 0

            # swing foot reference
            target = (plan_x.future_steps[0], plan_y.future_steps[0])
            prev_swing = swing.copy()
            if clock.late:
                swing = np.array(
                    [target[0], target[1], swing[2] - gait.late_drop_rate * SIM_DT]
                )
            else:
                if gait.swing_offset is not None:
                    offset = gait.swing_offset
                else:
                    # blind landing height: stance height plus the rise
                    # extrapolated from recent footholds, aimed slightly high
                    along = (target[0] - stance[0]) * u_cmd[0] + (
                        target[1] - stance[1]
                    ) * u_cmd[1]
                    land_est = stance[2] + slope_est * along + gait.landing_bias
                    offset = com_z_step_start - land_est
                ref = swing_foot_ref(
                    clock,
                    tuple(swing_start),
                    target,
                    com_z_step_start,
                    foot_height=gait.foot_height,
                    offset=offset,
                    nominal_height=vp.rest_length,
                    descend_rate=gait.descend_rate,
                )
                swing = ref.position

            # integrate CoM
            com, vel = step_dynamics(
                com,
                vel,
                stance,
                vplanner.current_r,
                hp.omega,
                vp.omega,
                vp.mass,
                force,
                SIM_DT,
            )
            vplanner.advance(SIM_DT / vp.sample_time)

            # contact handling
            h_prev = terr.height_at(prev_swing[0], prev_swing[1])
            h_new = terr.height_at(swing[0], swing[1])
            if (
                h_new - h_prev > gait.stub_jump
                and swing[2] < h_new - 1e-4
                and clock.phase_time > 0.0
            ):
                events.append((t, "toe_stub"))
                raise FallError("swing foot stuck against a riser")
            # only the second half of swing can land (earlier contact would be
            # a lift-off scuff, which the clock ignores anyway)
            contact = None
            if clock.late or clock.phase_time >= clock.step_duration / 2:
                contact = detect_touchdown(swing, terr)
            clock, ev = advance_clock(clock, SIM_DT, touchdown=contact is not None)
            if ev in (ClockEvent.STEP_END, ClockEvent.EARLY_TOUCHDOWN):
                tick_event = "touchdown"
                step_times.append(t)
                old_stance = stance.copy()
                d_along = (contact[0] - old_stance[0]) * u_cmd[0] + (
                    contact[1] - old_stance[1]
                ) * u_cmd[1]
                if abs(d_along) > 0.05:
                    cap = gait.max_slope_estimate
                    slope_est = min(
                        max((contact[2] - old_stance[2]) / d_along, -cap), cap
                    )
                prev_stance = old_stance
                stance = contact
                swing = old_stance
                swing_start = old_stance.copy()
                com_z_step_start = com[2]
                vplanner.set_step_start(com[2] - stance[2], vel[2])
                vplanner.commit_step(float(vplan.delta_r[0]))
            elif ev == ClockEvent.LATE_TOUCHDOWN:
                tick_event = "late_touchdown"

            z_ref_rel, _ = vplanner.reference_at(clock.phase_time)
            rows.append(
                [
                    t,
                    com[0],
                    com[1],
                    com[2],
                    vel[0],
                    vel[1],
                    vel[2],
                    stance[2] + z_ref_rel,
                    vplanner.current_r,
                    clock.support_flag,
                    stance[0],
                    stance[1],
                    stance[2],
                    swing[0],
                    swing[1],
                    swing[2],
                    plan_x.future_steps[0],
                    plan_y.future_steps[0],
                    force[0],
                    force[1],
                    force[2],
                    tick_event,
                ]
            )
    except FallError as exc:
        events.append((len(rows) * SIM_DT, f"fall:{exc}"))
        outcome = "fall"
    except TerrainError:
        events.append((len(rows) * SIM_DT, "boundary"))
        outcome = "boundary"

    return SimLog(
        columns=COLUMNS,
        rows=rows,
        events=events,
        step_times=step_times,
        planner_latency=latencies,
        outcome=outcome,
    )


def summarize(log: SimLog, scenario: Scenario) -> dict:
    """Post-run summary statistics used by the CLI and acceptance tests."""
    summary: dict = {"outcome": log.outcome, "steps": len(log.step_times)}
    if not log.rows:
        return summary
    t = log.array("t")
    vx = log.array("vel_x")
    vy = log.array("vel_y")
    z = log.array("com_z")
    z_ref = log.array("z_ref")
    if len(log.step_times) >= 6:
        t_start = log.step_times[-6]
        t_end = log.step_times[-1]
        mask = (t >= t_start) & (t < t_end)
    else:
        mask = t >= 0
    summary["mean_vx"] = float(np.mean(vx[mask]))
    summary["mean_vy"] = float(np.mean(vy[mask]))
    summary["max_z_err"] = float(np.max(np.abs(z - z_ref)))
    summary["fall"] = log.outcome == "fall"
    if log.planner_latency:
        lat = np.sort(np.array(log.planner_latency))
        for p in (50, 95, 99):
            summary[f"latency_p{p}_ms"] = float(np.percentile(lat, p) * 1e3)
    return summary


def flat_scenario(**overrides) -> Scenario:
    """Convenience constructor used by tests and scripts."""
    terrain = overrides.pop("terrain", build_profile([], extent=(-10.0, 500.0)))
    return Scenario(terrain=terrain, **overrides)
