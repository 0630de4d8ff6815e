"""Step phasing, support alternation, and quintic swing-foot trajectories.

The swing z profile is built from two quintic halves: up to a predefined
apex height (zero vertical velocity at the midpoint), then down to the blind
landing height.  No orientation trajectory is produced; the foot stays
compliant to whatever it lands on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

log = logging.getLogger(__name__)


class ClockEvent(Enum):
    NONE = "none"
    STEP_END = "step_end"
    EARLY_TOUCHDOWN = "early_touchdown"
    LATE_TOUCHDOWN = "late_touchdown"


@dataclass(frozen=True)
class GaitClock:
    step_duration: float
    phase_time: float = 0.0
    step_index: int = 0
    support_flag: int = 0  # 0 left, 1 right
    late: bool = False  # past step end, waiting for contact

    def __post_init__(self):
        if self.step_duration <= 0:
            raise ValueError("step_duration must be positive")
        if self.support_flag not in (0, 1):
            raise ValueError("support flag must be 0 or 1")


@dataclass(frozen=True)
class QuinticSegment:
    coeffs: np.ndarray  # ascending powers, length 6
    duration: float

    def evaluate(self, t: float) -> tuple[float, float, float]:
        c = self.coeffs
        pos = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
        vel = c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))
        acc = 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))
        return pos, vel, acc


def quintic_coeffs(
    p0: float, v0: float, a0: float, p1: float, v1: float, a1: float, duration: float
) -> QuinticSegment:
    """Unique degree-5 polynomial matching position/velocity/acceleration at
    both ends."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    T = duration
    c0, c1, c2 = p0, v0, 0.5 * a0
    # boundary system for the remaining three coefficients
    b = np.array(
        [
            p1 - (c0 + c1 * T + c2 * T**2),
            v1 - (c1 + 2 * c2 * T),
            a1 - 2 * c2,
        ]
    )
    m = np.array(
        [
            [T**3, T**4, T**5],
            [3 * T**2, 4 * T**3, 5 * T**4],
            [6 * T, 12 * T**2, 20 * T**3],
        ]
    )
    c345 = np.linalg.solve(m, b)
    return QuinticSegment(coeffs=np.array([c0, c1, c2, *c345]), duration=T)


@dataclass
class SwingReference:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


def swing_foot_ref(
    clock: GaitClock,
    start_pose: tuple[float, float, float],
    target_xy: tuple[float, float],
    com_z_at_step_start: float,
    foot_height: float = 0.05,
    offset: float | None = None,
    nominal_height: float = 0.715,
    descend_rate: float = 0.5,
) -> SwingReference:
    """Swing-foot reference at the clock's current phase time.

    x and y follow single quintics from the lift-off pose to the planned
    target; z rises to the apex at mid-step and descends to the blind landing
    height ``com_z_at_step_start - offset``.  The default offset equals the
    nominal CoM height so nominal landings reach the current stance level.

    The descent half arrives with a finite downward velocity rather than
    zero: a blind landing height is only an estimate, and a foot that
    decelerates to a hover converts centimeter height errors into long
    touchdown timing errors.  The terminal rate also matches the constant
    descent used after a missed touchdown, so the profile continues smoothly
    into late-landing mode.
    """
    T = clock.step_duration
    t = min(max(clock.phase_time, 0.0), T)
    if offset is None:
        offset = nominal_height
    land_z = com_z_at_step_start - offset
    sx = quintic_coeffs(start_pose[0], 0, 0, target_xy[0], 0, 0, T)
    sy = quintic_coeffs(start_pose[1], 0, 0, target_xy[1], 0, 0, T)
    px, vx, ax = sx.evaluate(t)
    py, vy, ay = sy.evaluate(t)
    apex = land_z + foot_height
    if t <= T / 2:
        sz = quintic_coeffs(start_pose[2], 0, 0, apex, 0, 0, T / 2)
        pz, vz, az = sz.evaluate(t)
    else:
        sz = quintic_coeffs(apex, 0, 0, land_z, -descend_rate, 0, T / 2)
        pz, vz, az = sz.evaluate(t - T / 2)
    return SwingReference(
        position=np.array([px, py, pz]),
        velocity=np.array([vx, vy, vz]),
        acceleration=np.array([ax, ay, az]),
    )


def advance_clock(
    clock: GaitClock, dt: float, touchdown: bool = False
) -> tuple[GaitClock, ClockEvent]:
    """Advance phase time and resolve touchdown events.

    A touchdown in the second half of swing exchanges support immediately
    (early touchdown on rising terrain); reaching the step end without
    contact enters late-touchdown mode, resolved by the caller when contact
    finally happens.  Touchdowns in the first half are ignored as spurious.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    T = clock.step_duration
    t = clock.phase_time + dt
    if touchdown:
        if clock.late or t >= T / 2:
            return (
                GaitClock(
                    step_duration=T,
                    phase_time=0.0,
                    step_index=clock.step_index + 1,
                    support_flag=1 - clock.support_flag,
                ),
                ClockEvent.EARLY_TOUCHDOWN if t < T and not clock.late else ClockEvent.STEP_END,
            )
        log.warning("ignoring touchdown at phase %.3f s (first half of swing)", t)
    if t >= T:
        return replace(clock, phase_time=T, late=True), (
            ClockEvent.NONE if clock.late else ClockEvent.LATE_TOUCHDOWN
        )
    return replace(clock, phase_time=t), ClockEvent.NONE
