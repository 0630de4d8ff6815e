"""Horizontal footstep MPC on the LIP half of the decoupled model.

x and y are planned as two independent QPs with identical structure.  The
decision variables are the per-step displacements of the future footsteps;
the cost tracks the commanded CoM velocity, regularizes the per-sample
inputs toward the nominal gait, and pulls each step displacement toward the
nominal step length (sagittal) or the alternating inter-feet clearance
(lateral).  Footstep reachability relative to the predicted CoM at each
touchdown enters as linear box constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qp import ActiveSetQp, QpProblem, QpStatus


@dataclass
class HorizontalParams:
    nominal_height: float = 0.715
    gravity: float = 9.81
    sample_time: float = 0.1
    step_duration: float = 0.7
    predicted_steps: int = 4
    desired_velocity: tuple[float, float] = (0.3, 0.0)
    step_width: float = 0.15  # lateral half-distance between feet
    nominal_offset: tuple[float, float] = (0.0, 0.0)
    reach_box: tuple[float, float] = (0.35, 0.20)
    q_vel: float = 10.0
    terminal_scale: float = 1.0
    r_weight: float = 1e-3
    w_delta: float = 1.0

    omega: float = field(init=False)
    samples_per_step: int = field(init=False)

    def __post_init__(self):
        if self.nominal_height <= 0:
            raise ValueError("nominal_height must be positive")
        self.omega = math.sqrt(self.gravity / self.nominal_height)
        ns = self.step_duration / self.sample_time
        self.samples_per_step = int(round(ns))
        if abs(self.samples_per_step * self.sample_time - self.step_duration) > 1e-9:
            raise ValueError("step_duration must be an integer multiple of sample_time")
        if self.predicted_steps < 1:
            raise ValueError("predicted_steps must be >= 1")


@dataclass
class HorizontalState:
    position: float
    velocity: float

    def __post_init__(self):
        if not (math.isfinite(self.position) and math.isfinite(self.velocity)):
            raise ValueError("horizontal state must be finite")


@dataclass
class FootstepPlan:
    support_now: float
    future_steps: np.ndarray  # absolute axis positions of the planned steps
    predicted_states: np.ndarray  # (N, 2) of (pos, vel)
    support_flag: int
    delta: np.ndarray
    status: QpStatus = QpStatus.OPTIMAL
    relaxed: bool = False
    failed: bool = False


def lip_flow(position: float, velocity: float, support: float, omega: float, dt: float):
    """Closed-form pendulum state a time dt ahead under a fixed support."""
    c, s = math.cosh(omega * dt), math.sinh(omega * dt)
    rel = position - support
    return support + rel * c + velocity / omega * s, rel * omega * s + velocity * c


def discretize_lip(omega_x: float, ts: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-sample discretization of the linear inverted pendulum."""
    if omega_x <= 0 or ts <= 0:
        raise ValueError("omega_x and ts must be positive")
    c, s = math.cosh(omega_x * ts), math.sinh(omega_x * ts)
    a = np.array([[c, s / omega_x], [omega_x * s, c]])
    # the minus sign on the velocity row makes the stance point a fixed point
    b = np.array([1.0 - c, -omega_x * s])
    return a, b


def build_input_map(n_r: int, n_s: int, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Map (current support, future steps) to the per-sample input sequence.

    Returns (carry, select) with ``u = carry * P0 + select @ [P1..P_nsteps]``;
    the first n_r samples hold the current support position, then n_s samples
    of each future step.
    """
    if not (0 <= n_r <= n_s):
        raise ValueError("need 0 <= n_r <= n_s")
    n = n_r + n_s * n_steps
    carry = np.zeros(n)
    carry[:n_r] = 1.0
    select = np.zeros((n, n_steps))
    for i in range(n_steps):
        select[n_r + i * n_s : n_r + (i + 1) * n_s, i] = 1.0
    return carry, select


class _AxisPlanner:
    """Planner for one horizontal axis, with per-phase cached matrices."""

    def __init__(self, params: HorizontalParams):
        self.params = params
        self._a, self._b = discretize_lip(params.omega, params.sample_time)
        self._solver = ActiveSetQp()
        self._warm: np.ndarray | None = None
        self._cache: dict[int, dict] = {}

    def _matrices(self, n_r: int) -> dict:
        cached = self._cache.get(n_r)
        if cached is not None:
            return cached
        p = self.params
        ns, n_steps = p.samples_per_step, p.predicted_steps
        n = n_r + ns * n_steps
        a, b = self._a, self._b
        powers = np.zeros((n + 1, 2, 2))
        powers[0] = np.eye(2)
        for k in range(1, n + 1):
            powers[k] = a @ powers[k - 1]
        m_state = powers.reshape((n + 1) * 2, 2)
        m_in = np.zeros((2 * (n + 1), n))
        for k in range(1, n + 1):
            for j in range(k):
                m_in[2 * k : 2 * k + 2, j] = powers[k - 1 - j] @ b
        carry, select = build_input_map(n_r, ns, n_steps)
        lmat = np.tril(np.ones((n_steps, n_steps)))
        s_map = select @ lmat  # u sensitivity to delta
        c0 = carry + select.sum(axis=1)  # u coefficient on P0
        mc0 = m_in @ c0
        g_delta = m_in @ s_map  # (2(n+1), n_steps) state sensitivity
        vel_rows = np.arange(1, n + 1) * 2 + 1
        pos_rows = np.arange(1, n + 1) * 2
        gv = g_delta[vel_rows]
        w = np.full(n, p.q_vel)
        w[-1] = p.q_vel * p.terminal_scale
        h = (
            2.0 * gv.T @ (gv * w[:, None])
            + 2.0 * p.r_weight * s_map.T @ s_map
            + 2.0 * p.w_delta * np.eye(n_steps)
        )
        touchdown = np.array([n_r + i * ns for i in range(n_steps)])
        c_rows = lmat - g_delta[2 * touchdown]  # d(p_i - c_i)/d(delta)
        cached = {
            "n": n,
            "m_state": m_state,
            "m_in": m_in,
            "mc0": mc0,
            "s_map": s_map,
            "gv": gv,
            "w": w,
            "h": h,
            "lmat": lmat,
            "touchdown": touchdown,
            "c_rows": c_rows,
            "pos_rows": pos_rows,
            "vel_rows": vel_rows,
        }
        self._cache[n_r] = cached
        return cached

    def plan(
        self,
        state: HorizontalState,
        support: float,
        n_r: int,
        v_ref: float | np.ndarray,
        d_steps: np.ndarray,
        reach: float,
        offset: float,
        support_flag: int,
    ) -> FootstepPlan:
        """Plan from a state on a sample boundary with n_r samples left in
        the current step (0 means the exchange is imminent)."""
        p = self.params
        ns = p.samples_per_step
        if not (0 <= n_r <= ns):
            raise ValueError(f"n_r {n_r} outside [0, {ns}]")
        m = self._matrices(n_r)
        x0 = np.array([state.position, state.velocity])
        free = m["m_state"] @ x0 + m["mc0"] * support
        v_free = free[m["vel_rows"]]
        v_ref = np.broadcast_to(np.asarray(v_ref, dtype=float), (m["n"],))
        g = (
            2.0 * m["gv"].T @ ((v_free - v_ref) * m["w"])
            - 2.0 * p.r_weight * m["s_map"].T @ (m["s_map"] @ d_steps)
            - 2.0 * p.w_delta * d_steps
        )
        c_free = free[2 * m["touchdown"]]
        const = support - c_free
        lower = (offset - reach) - const
        upper = (offset + reach) - const

        problem = QpProblem(
            hessian=m["h"], gradient=g, ineq_matrix=m["c_rows"], ineq_lower=lower, ineq_upper=upper
        )
        sol = self._solver.solve(problem, warm_start=self._warm)
        relaxed = False
        failed = False
        if sol.status == QpStatus.INFEASIBLE:
            relaxed = True
            problem = QpProblem(
                hessian=m["h"],
                gradient=g,
                ineq_matrix=m["c_rows"],
                ineq_lower=(offset - 1.5 * reach) - const,
                ineq_upper=(offset + 1.5 * reach) - const,
            )
            sol = self._solver.solve(problem, warm_start=self._warm)
            if sol.status == QpStatus.INFEASIBLE:
                failed = True
        delta = sol.x
        self._warm = delta.copy()
        states = (free + m["m_in"] @ (m["s_map"] @ delta)).reshape(-1, 2)[1:]
        steps = support + m["lmat"] @ delta
        return FootstepPlan(
            support_now=support,
            future_steps=steps,
            predicted_states=states,
            support_flag=support_flag,
            delta=delta,
            status=sol.status,
            relaxed=relaxed,
            failed=failed,
        )


def steady_velocity_refs(
    params: HorizontalParams, phase: int, support_flag: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample velocity references of the steady alternating gait.

    A constant reference (zero laterally) makes the nominal gait itself
    costly and its optimum drift with phase; the periodic pendulum-cycle
    profile has zero residual on the nominal gait, so the tracking term
    acts as feedback around the limit cycle.
    """
    p = params
    ns, n_steps = p.samples_per_step, p.predicted_steps
    n = (ns - phase) + ns * n_steps
    w, T = p.omega, p.step_duration
    vx, vy = p.desired_velocity
    # sample k is (phase + k) planner samples after the current step start
    k = np.arange(1, n + 1)
    t_loc = ((phase + k - 1) % ns + 1) * p.sample_time
    side = (support_flag + (phase + k - 1) // ns) % 2
    sign = 1.0 - 2.0 * side  # left support +1, right -1
    cwt, swt = np.cosh(w * t_loc), np.sinh(w * t_loc)

    lam = vx * T / 2.0
    v0x = lam * w * math.sinh(w * T) / (math.cosh(w * T) - 1.0)
    ref_x = v0x * cwt - lam * w * swt

    v0y = p.step_width * w * math.tanh(w * T / 2.0)
    ref_y = sign * (v0y * cwt - p.step_width * w * swt) + vy
    return ref_x, ref_y


class FootstepPlanner:
    """Two independent axis planners sharing one parameter set."""

    def __init__(self, params: HorizontalParams):
        self.params = params
        self._x = _AxisPlanner(params)
        self._y = _AxisPlanner(params)

    def desired_steps(self, support_flag: int) -> tuple[np.ndarray, np.ndarray]:
        """Nominal per-step displacements (d_i) for both axes."""
        p = self.params
        n = p.predicted_steps
        dx = np.full(n, p.desired_velocity[0] * p.step_duration)
        i = np.arange(1, n + 1)
        dy = 2.0 * p.step_width * np.power(-1.0, support_flag + i) + p.desired_velocity[
            1
        ] * p.step_duration
        return dx, dy

    def plan(
        self,
        state_x: HorizontalState,
        state_y: HorizontalState,
        stance: tuple[float, float, int],
        phase_time: float,
        com_now: tuple[float, float] | None = None,
    ) -> tuple[FootstepPlan, FootstepPlan]:
        """Plan from the instantaneous state at phase_time into the step.

        The state is first flowed analytically to the next planner sample
        boundary; planning from an off-grid state directly would look like a
        large state deviation and produce erratic placements.
        """
        p = self.params
        ns, ts = p.samples_per_step, p.sample_time
        p0x, p0y, flag = stance
        if flag not in (0, 1):
            raise ValueError("support flag must be 0 (left) or 1 (right)")
        if not (0.0 <= phase_time <= p.step_duration + 1e-9):
            raise ValueError(f"phase_time {phase_time} outside the step")
        k_next = min(int(math.floor(phase_time / ts + 1.0 - 1e-9)), ns)
        lead = k_next * ts - phase_time
        n_r = ns - k_next
        if lead > 1e-12:
            state_x = HorizontalState(*lip_flow(state_x.position, state_x.velocity, p0x, p.omega, lead))
            state_y = HorizontalState(*lip_flow(state_y.position, state_y.velocity, p0y, p.omega, lead))
        dx, dy = self.desired_steps(flag)
        ref_x, ref_y = steady_velocity_refs(p, k_next, flag)
        plan_x = self._x.plan(
            state_x,
            p0x,
            n_r,
            ref_x,
            dx,
            p.reach_box[0],
            p.nominal_offset[0],
            flag,
        )
        plan_y = self._y.plan(
            state_y,
            p0y,
            n_r,
            ref_y,
            dy,
            p.reach_box[1],
            p.nominal_offset[1],
            flag,
        )
        return plan_x, plan_y


def plan_footsteps(
    state_x: HorizontalState,
    state_y: HorizontalState,
    stance: tuple[float, float, int],
    phase_time: float,
    com_now: tuple[float, float],
    params: HorizontalParams,
) -> tuple[FootstepPlan, FootstepPlan]:
    """One-shot planning entry point (no warm-start reuse across calls)."""
    return FootstepPlanner(params).plan(state_x, state_y, stance, phase_time, com_now)
