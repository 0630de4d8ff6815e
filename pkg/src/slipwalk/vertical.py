"""Vertical CoM-height MPC on the actuated-spring half of the decoupled model.

The spring dynamics are discretized exactly (harmonic-oscillator matrix
exponential).  The reference spring length is constrained to change linearly
within each step; the MPC decision variables are the per-step total length
changes, which keeps the QP at one variable per predicted step.

Internally the control input is expressed as the equilibrium height
``u = r - g/omega^2`` so that the planner tracks CoM height directly; the
"spring length" reported to callers is this equilibrium height plus the
gravity sag, matching the convention that the nominal CoM height equals the
rest length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qp import ActiveSetQp, QpProblem, QpStatus


@dataclass
class VerticalParams:
    mass: float = 14.5
    stiffness: float = 1470.0
    rest_length: float = 0.715
    step_duration: float = 0.7
    sample_time: float = 0.05
    predicted_steps: int = 1
    gravity: float = 9.81
    # weights: Q on (z, zdot) tracking, P terminal = terminal_scale * Q,
    # R on input tracking, W on per-step length change
    q_weights: tuple[float, float] = (100.0, 10.0)
    terminal_scale: float = 5.0
    r_weight: float = 1e-4
    w_delta: float = 10.0

    omega: float = field(init=False)
    samples_per_step: int = field(init=False)

    def __post_init__(self):
        if self.mass <= 0 or self.stiffness <= 0:
            raise ValueError("mass and stiffness must be positive")
        self.omega = math.sqrt(self.stiffness / self.mass)
        ns = self.step_duration / self.sample_time
        self.samples_per_step = int(round(ns))
        if abs(self.samples_per_step * self.sample_time - self.step_duration) > 1e-9:
            raise ValueError("step_duration must be an integer multiple of sample_time")
        if self.predicted_steps < 1:
            raise ValueError("predicted_steps must be >= 1")

    @property
    def sag(self) -> float:
        """Static spring compression under gravity, g/omega^2."""
        return self.gravity / self.omega**2


@dataclass
class VerticalState:
    z: float  # CoM height above the current stance contact
    z_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and math.isfinite(self.z_dot)):
            raise ValueError("vertical state must be finite")
        if self.z <= 0:
            raise ValueError("CoM must be above the stance contact")


@dataclass
class VerticalSolution:
    delta_r: np.ndarray  # per-step spring length changes
    r_trajectory: np.ndarray  # per-sample reference length (reported convention)
    predicted_states: np.ndarray  # (N, 2) samples of (z, zdot)
    status: QpStatus = QpStatus.OPTIMAL


def discretize_vertical(omega_z: float, ts: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact discretization of the spring oscillator over one sample."""
    if omega_z <= 0 or ts <= 0:
        raise ValueError("omega_z and ts must be positive")
    c, s = math.cos(omega_z * ts), math.sin(omega_z * ts)
    a = np.array([[c, s / omega_z], [-omega_z * s, c]])
    b = np.array([1.0 - c, omega_z * s])
    return a, b


def vertical_reference(
    z0: float,
    zdot0: float,
    r0: float,
    r_t: float,
    duration: float,
    t: float,
    omega: float,
    gravity: float = 9.81,
) -> tuple[float, float]:
    """Closed-form spring evolution with a linearly ramped rest length.

    Valid for t in [0, duration]; for t beyond the ramp the rest length is
    held at its final value and the oscillation continues from the ramp end.
    """
    sag = gravity / omega**2
    if t > duration:
        z_end, zdot_end = vertical_reference(z0, zdot0, r0, r_t, duration, duration, omega, gravity)
        return vertical_reference(z_end, zdot_end, r_t, r_t, duration, t - duration, omega, gravity)
    slope = (r_t - r0) / duration if duration > 0 else 0.0
    d1 = z0 - r0 + sag
    d2 = zdot0 / omega - slope / omega
    wt = omega * t
    r = r0 + slope * t
    z = d1 * math.cos(wt) + d2 * math.sin(wt) + r - sag
    zdot = -d1 * omega * math.sin(wt) + d2 * omega * math.cos(wt) + slope
    return z, zdot


class VerticalPlanner:
    """Receding-horizon height planner.

    The per-step reference trajectory is the closed-form spring evolution
    from the state measured at the start of the current step, oscillating
    around the nominal height.  Call :meth:`set_step_start` at each support
    exchange.
    """

    def __init__(self, params: VerticalParams):
        self.params = params
        self._a, self._b = discretize_vertical(params.omega, params.sample_time)
        self._solver = ActiveSetQp()
        self._warm: np.ndarray | None = None
        p = params
        self.nominal_height = p.rest_length
        self._step_start = (p.rest_length, 0.0)
        # committed rest-length ramp for the remainder of the current step:
        # u(sample) = _u_now + _u_slope * samples_ahead
        self._u_now = p.rest_length
        self._u_slope = 0.0
        self._cache: dict[int, dict[str, np.ndarray]] = {}

    def set_step_start(self, z: float, z_dot: float):
        """Re-anchor the reference at a support exchange."""
        self._step_start = (z, z_dot)

    def commit_step(self, delta_r_first: float):
        """Adopt the first planned length change as the executing ramp for
        the step that begins now."""
        self._u_slope = delta_r_first / self.params.samples_per_step

    @property
    def current_r(self) -> float:
        return self._u_now

    def advance(self, fraction_of_sample: float):
        """Advance the executing ramp by a fraction of one planner sample."""
        self._u_now += self._u_slope * fraction_of_sample

    def reference_at(self, t: float) -> tuple[float, float]:
        """Reference (z, zdot) at time t since the start of the current step."""
        p = self.params
        z0, zdot0 = self._step_start
        r_nom = self.nominal_height + p.sag
        return vertical_reference(z0, zdot0, r_nom, r_nom, p.step_duration, t, p.omega, p.gravity)

    def _matrices(self, n_r: int) -> dict[str, np.ndarray]:
        """Condensed prediction matrices for a given remaining-sample count."""
        cached = self._cache.get(n_r)
        if cached is not None:
            return cached
        p = self.params
        ns, n_steps = p.samples_per_step, p.predicted_steps
        n = n_r + ns * n_steps
        a, b = self._a, self._b
        # state prediction: X_k = powers[k] X0 + sum_j toeplitz[k, j] u_j
        powers = np.zeros((n + 1, 2, 2))
        powers[0] = np.eye(2)
        for k in range(1, n + 1):
            powers[k] = a @ powers[k - 1]
        # input-to-state map, flattened: rows 2k..2k+1 give X_k
        m_in = np.zeros((2 * (n + 1), n))
        for k in range(1, n + 1):
            for j in range(k):
                m_in[2 * k : 2 * k + 2, j] = powers[k - 1 - j] @ b
        m_state = powers.reshape((n + 1) * 2, 2)
        # input structure: u = u_base + ramp_map @ delta_r
        # remainder samples follow the committed ramp (known); predicted step i
        # ramps with slope delta_r[i] / ns
        ramp = np.zeros((n, n_steps))
        for i in range(n_steps):
            k0 = n_r + i * ns
            for s in range(ns):
                ramp[k0 + s, i] = (s + 1) / ns
            ramp[k0 + ns :, i] = 1.0
        # sensitivity of predicted states 1..N to delta_r, split by component
        sens = (m_in @ ramp).reshape(n + 1, 2, n_steps)[1:]
        q = np.asarray(p.q_weights)
        weights = np.tile(q, (n, 1))
        weights[-1] = p.terminal_scale * q
        h = 2.0 * p.w_delta * np.eye(n_steps) + 2.0 * p.r_weight * ramp.T @ ramp
        sw = []
        for d in range(2):
            swd = sens[:, d, :] * weights[:, d : d + 1]
            h += 2.0 * sens[:, d, :].T @ swd
            sw.append(swd)
        cached = {
            "m_state": m_state,
            "m_in": m_in,
            "ramp": ramp,
            "n": n,
            "sens": sens,
            "h": h,
            "sw0": sw[0],
            "sw1": sw[1],
        }
        self._cache[n_r] = cached
        return cached

    def plan(self, state: VerticalState, phase_time: float) -> VerticalSolution:
        """Solve the height QP from the instantaneous state at phase_time.

        The state is first flowed analytically to the next planner sample
        boundary so the prediction grid stays aligned with the step clock.
        """
        p = self.params
        ns = p.samples_per_step
        if not (0.0 <= phase_time <= p.step_duration + 1e-9):
            raise ValueError(f"phase_time {phase_time} outside the step")
        k_next = min(int(math.floor(phase_time / p.sample_time + 1.0 - 1e-9)), ns)
        lead = k_next * p.sample_time - phase_time
        n_r = ns - k_next
        z, z_dot = state.z, state.z_dot
        u_next = self._u_now + self._u_slope * (lead / p.sample_time)
        if lead > 1e-12:
            z, z_dot = vertical_reference(
                z,
                z_dot,
                self._u_now + p.sag,
                u_next + p.sag,
                lead,
                lead,
                p.omega,
                p.gravity,
            )
        m = self._matrices(n_r)
        n, ramp, sens = m["n"], m["ramp"], m["sens"]

        # known input profile with delta_r = 0: remainder continues the
        # committed ramp, future steps hold the value reached at step end
        u_base = np.empty(n)
        if n_r:
            u_base[:n_r] = u_next + self._u_slope * np.arange(1, n_r + 1)
            u_base[n_r:] = u_base[n_r - 1]
        else:
            u_base[:] = u_next

        x0 = np.array([z, z_dot])
        free = (m["m_state"] @ x0 + m["m_in"] @ u_base).reshape(n + 1, 2)[1:]

        # reference: closed-form oscillation around the nominal height from
        # the state anchored at the current step start
        t_arr = (k_next + np.arange(1, n + 1)) * p.sample_time
        z0a, zdot0a = self._step_start
        d1 = z0a - self.nominal_height
        d2 = zdot0a / p.omega
        wt = p.omega * t_arr
        ref = np.empty((n, 2))
        ref[:, 0] = d1 * np.cos(wt) + d2 * np.sin(wt) + self.nominal_height
        ref[:, 1] = -d1 * p.omega * np.sin(wt) + d2 * p.omega * np.cos(wt)

        err0 = free - ref
        # reference input is the current length held constant (zero change)
        du0 = u_base - self._u_now
        g = (
            2.0 * m["sw0"].T @ err0[:, 0]
            + 2.0 * m["sw1"].T @ err0[:, 1]
            + 2.0 * p.r_weight * ramp.T @ du0
        )

        problem = QpProblem(hessian=m["h"], gradient=g)
        sol = self._solver.solve(problem, warm_start=self._warm)
        delta = sol.x
        self._warm = delta.copy()

        u = u_base + ramp @ delta
        states = free + sens @ delta
        return VerticalSolution(
            delta_r=delta,
            r_trajectory=u + 0.0,  # reported length == equilibrium height convention
            predicted_states=states,
            status=sol.status,
        )
