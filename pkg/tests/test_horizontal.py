"""Footstep planner: exact pendulum discretization, steady-cycle optimality,
grid-search oracle, reachability handling."""

import math

import numpy as np
import pytest

from slipwalk.horizontal import (
    FootstepPlanner,
    HorizontalParams,
    HorizontalState,
    build_input_map,
    discretize_lip,
    lip_flow,
    steady_velocity_refs,
)


def rk4_pendulum(x0, v0, p, omega, duration, dt=1e-5):
    """Independent RK4 integration of x_ddot = omega^2 (x - p)."""
    steps = max(int(round(duration / dt)), 1)
    dt = duration / steps
    x, v = x0, v0

    def accel(x):
        return omega**2 * (x - p)

    for _ in range(steps):
        k1x, k1v = v, accel(x)
        k2x, k2v = v + 0.5 * dt * k1v, accel(x + 0.5 * dt * k1x)
        k3x, k3v = v + 0.5 * dt * k2v, accel(x + 0.5 * dt * k2x)
        k4x, k4v = v + dt * k3v, accel(x + dt * k3x)
        x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x, v


def test_discretization_matches_rk4():
    rng = np.random.default_rng(20)
    for _ in range(100):
        omega = rng.uniform(1.0, 8.0)
        ts = rng.uniform(0.02, 0.3)
        a, b = discretize_lip(omega, ts)
        x0 = rng.normal(size=2)
        p = rng.normal()
        pred = a @ x0 + b * p
        x, v = rk4_pendulum(x0[0], x0[1], p, omega, ts)
        assert abs(pred[0] - x) < 1e-6
        assert abs(pred[1] - v) < 1e-6


def test_velocity_input_row_sign_keeps_support_a_fixed_point():
    a, b = discretize_lip(3.7, 0.1)
    # resting exactly on the support point must stay there
    p = 0.4
    state = a @ np.array([p, 0.0]) + b * p
    assert state[0] == pytest.approx(p, abs=1e-12)
    assert state[1] == pytest.approx(0.0, abs=1e-12)


def test_closed_form_flow_matches_discretization():
    params = HorizontalParams()
    a, b = discretize_lip(params.omega, params.sample_time)
    x0, v0, p = 0.1, 0.3, 0.05
    pos, vel = lip_flow(x0, v0, p, params.omega, params.sample_time)
    pred = a @ np.array([x0, v0]) + b * p
    assert pos == pytest.approx(pred[0], abs=1e-12)
    assert vel == pytest.approx(pred[1], abs=1e-12)


def test_input_map_holds_support_then_steps():
    carry, select = build_input_map(3, 7, 2)
    u = carry * 10.0 + select @ np.array([20.0, 30.0])
    assert np.all(u[:3] == 10.0)
    assert np.all(u[3:10] == 20.0)
    assert np.all(u[10:] == 30.0)
    with pytest.raises(ValueError):
        build_input_map(8, 7, 2)


def steady_states(params, flag):
    """Exact steady-cycle (x, y) states at a step start for a given support."""
    w, T = params.omega, params.step_duration
    vx, vy = params.desired_velocity
    lam = vx * T / 2.0
    v0x = (
        lam * w * math.sinh(w * T) / (math.cosh(w * T) - 1.0) if vx else 0.0
    )
    d = params.step_width
    v0y = d * w * math.tanh(w * T / 2.0)
    sign = 1.0 - 2.0 * flag
    px, py = 0.0, sign * d
    sx = HorizontalState(px - lam, v0x)
    sy = HorizontalState(0.0, sign * v0y + vy)
    return sx, sy, (px, py)


def test_steady_cycle_plans_are_the_nominal_gait():
    params = HorizontalParams()
    d = params.step_width
    step_len = params.desired_velocity[0] * params.step_duration
    for flag in (0, 1):
        for k in range(params.samples_per_step + 1):
            planner = FootstepPlanner(params)
            sx, sy, (px, py) = steady_states(params, flag)
            t = k * params.sample_time
            sx_t = HorizontalState(*lip_flow(sx.position, sx.velocity, px, params.omega, t))
            sy_t = HorizontalState(*lip_flow(sy.position, sy.velocity, py, params.omega, t))
            plan_x, plan_y = planner.plan(sx_t, sy_t, (px, py, flag), t)
            sign = 1.0 - 2.0 * flag
            for i in range(params.predicted_steps):
                assert plan_x.future_steps[i] == pytest.approx(
                    px + (i + 1) * step_len, abs=1e-6
                )
            expected_y = [py - sign * 2 * d, py, py - sign * 2 * d, py]
            np.testing.assert_allclose(plan_y.future_steps, expected_y, atol=1e-6)


def _axis_cost(params, state, support, n_r, v_ref, d_steps, deltas):
    """Objective recomputed independently by forward-simulating the pendulum
    for a batch of candidate step-displacement vectors."""
    p = params
    ns, n_steps = p.samples_per_step, p.predicted_steps
    n = n_r + ns * n_steps
    deltas = np.atleast_2d(deltas)
    steps = support + np.cumsum(deltas, axis=1)
    u = np.empty((deltas.shape[0], n))
    u[:, :n_r] = support
    for i in range(n_steps):
        u[:, n_r + i * ns : n_r + (i + 1) * ns] = steps[:, i : i + 1]
    c = math.cosh(p.omega * p.sample_time)
    s = math.sinh(p.omega * p.sample_time)
    x = np.full(deltas.shape[0], state.position)
    v = np.full(deltas.shape[0], state.velocity)
    vels = np.empty_like(u)
    for k in range(n):
        rel = x - u[:, k]
        x = u[:, k] + rel * c + v / p.omega * s
        v = rel * p.omega * s + v * c
        vels[:, k] = v
    w = np.full(n, p.q_vel)
    w[-1] = p.q_vel * p.terminal_scale
    carry, select = build_input_map(n_r, ns, n_steps)
    s_map = select @ np.tril(np.ones((n_steps, n_steps)))
    dd = deltas - d_steps
    cost = np.sum(w * (vels - v_ref) ** 2, axis=1)
    cost += p.r_weight * np.sum((dd @ s_map.T) ** 2, axis=1)
    cost += p.w_delta * np.sum(dd**2, axis=1)
    return cost


def touchdown_margins(params, state, support, n_r, reach, delta):
    """Distance of each planned step from its reach-box faces (negative
    means the step is outside the box), from an independent forward
    simulation of the pendulum."""
    p = params
    ns, n_steps = p.samples_per_step, p.predicted_steps
    steps = support + np.cumsum(delta)
    u = np.empty(n_r + ns * n_steps)
    u[:n_r] = support
    for i in range(n_steps):
        u[n_r + i * ns : n_r + (i + 1) * ns] = steps[i]
    positions = [state.position]
    x, v = state.position, state.velocity
    for uk in u:
        x, v = lip_flow(x, v, uk, p.omega, p.sample_time)
        positions.append(x)
    c = np.array([positions[n_r + i * ns] for i in range(n_steps)])
    return reach - np.abs(steps - c)


def _min_over_first(cost_fn, rest, span=0.8, shrinks=14, points=21):
    """Minimize the cost over the first variable by a shrinking 1-D grid,
    batched over a set of candidates for the remaining variables."""
    rest = np.atleast_2d(rest)
    g = rest.shape[0]
    t = np.zeros(g)
    width = span
    offsets = np.linspace(-0.5, 0.5, points)
    rows = np.repeat(rest, points, axis=0)
    for _ in range(shrinks):
        cands = t[:, None] + offsets[None, :] * width
        full = np.concatenate([cands.reshape(-1, 1), rows], axis=1)
        costs = cost_fn(full).reshape(g, points)
        idx = np.argmin(costs, axis=1)
        t = cands[np.arange(g), idx]
        width /= 3.0
    return costs[np.arange(g), idx], t


def grid_refine(cost_fn, n_vars, span=0.6, shrinks=12, points=21):
    """Nested grid search.  The cost is stiff almost entirely along the
    first step variable (later samples amplify it by the pendulum's
    exponential), which makes a flat per-coordinate grid stall on a narrow
    diagonal valley.  Minimizing the first variable out with an inner 1-D
    grid leaves a well-conditioned reduced cost, which a cyclic coordinate
    grid with shrinking brackets handles directly."""
    rest = np.zeros(n_vars - 1)
    width = span
    for _ in range(shrinks):
        for _ in range(4):
            moved = 0.0
            for i in range(n_vars - 1):
                grid = rest[i] + np.linspace(-width / 2, width / 2, points)
                batch = np.tile(rest, (points, 1))
                batch[:, i] = grid
                costs, _ = _min_over_first(cost_fn, batch)
                new = grid[int(np.argmin(costs))]
                moved = max(moved, abs(new - rest[i]))
                rest[i] = new
            if moved == 0.0:
                break
        width /= 3.0
    _, first = _min_over_first(cost_fn, rest[None, :])
    return np.concatenate([first, rest])


def test_planner_matches_grid_search_oracle():
    params = HorizontalParams()
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 20:
        planner = FootstepPlanner(params)
        flag = int(rng.integers(0, 2))
        sx, sy, (px, py) = steady_states(params, flag)
        state_x = HorizontalState(sx.position + rng.normal(scale=0.02), sx.velocity + rng.normal(scale=0.05))
        state_y = HorizontalState(sy.position + rng.normal(scale=0.01), sy.velocity + rng.normal(scale=0.05))
        k = int(rng.integers(0, params.samples_per_step + 1))
        t = k * params.sample_time
        plan_x, plan_y = planner.plan(state_x, state_y, (px, py, flag), t)
        if plan_x.relaxed or plan_y.relaxed:
            continue
        n_r = params.samples_per_step - k
        ref_x, ref_y = steady_velocity_refs(params, k, flag)
        dx, dy = planner.desired_steps(flag)
        compared = 0
        for state, sup, ref, dst, reach, plan in (
            (state_x, px, ref_x, dx, params.reach_box[0], plan_x),
            (state_y, py, ref_y, dy, params.reach_box[1], plan_y),
        ):
            oracle = grid_refine(
                lambda dlt: _axis_cost(params, state, sup, n_r, ref, dst, dlt),
                params.predicted_steps,
            )
            # the oracle is unconstrained; only compare when its optimum
            # respects the reach boxes (constrained solves are covered by the
            # KKT residual and saturation tests)
            if np.min(touchdown_margins(params, state, sup, n_r, reach, oracle)) < 1e-6:
                continue
            assert np.max(np.abs(plan.delta - oracle)) < 1e-4
            compared += 1
        if compared == 2:
            checked += 1


def test_forward_velocity_error_moves_first_step_forward():
    params = HorizontalParams()
    planner = FootstepPlanner(params)
    sx, sy, (px, py) = steady_states(params, 0)
    base_x, _ = planner.plan(sx, sy, (px, py, 0), 0.0)
    pushed = HorizontalState(sx.position, sx.velocity + 0.2759)
    planner2 = FootstepPlanner(params)
    push_x, _ = planner2.plan(pushed, sy, (px, py, 0), 0.0)
    assert push_x.future_steps[0] > base_x.future_steps[0] + 0.02


def test_far_state_saturates_the_reach_box():
    params = HorizontalParams()
    planner = FootstepPlanner(params)
    sx, sy, (px, py) = steady_states(params, 0)
    runaway = HorizontalState(sx.position, sx.velocity + 2.0)
    plan_x, _ = planner.plan(runaway, sy, (px, py, 0), 0.0)
    # the first step lands exactly on a reach-box face (possibly the relaxed one)
    com_at_td = plan_x.predicted_states[params.samples_per_step - 1, 0]
    reach = params.reach_box[0] * (1.5 if plan_x.relaxed else 1.0)
    assert abs(abs(plan_x.future_steps[0] - com_at_td) - reach) < 1e-6


def test_bad_inputs_rejected():
    params = HorizontalParams()
    planner = FootstepPlanner(params)
    s = HorizontalState(0.0, 0.0)
    with pytest.raises(ValueError):
        planner.plan(s, s, (0.0, 0.15, 2), 0.0)
    with pytest.raises(ValueError):
        planner.plan(s, s, (0.0, 0.15, 0), 1.0)
    with pytest.raises(ValueError):
        HorizontalState(math.inf, 0.0)
    with pytest.raises(ValueError):
        HorizontalParams(step_duration=0.7, sample_time=0.09)
