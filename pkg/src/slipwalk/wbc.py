"""Whole-body QP controller: floating-base decomposition, task-space PD
commands, pyramidal friction cones, torque extraction.

The math is dimension-generic; a built-in planar seven-DoF model (pelvis
with two prismatic-knee legs, point feet) provides an analytically
checkable test bed.  Contact is handled softly: stance-foot zero
acceleration enters as a high-weight task rather than a hard constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qp import ActiveSetQp, QpProblem, QpSolution, QpStatus

# planar test model: pelvis carries nearly all the mass
PELVIS_MASS = 13.7
LEG_MASS = 0.4
TOTAL_MASS = PELVIS_MASS + 2 * LEG_MASS
PELVIS_INERTIA = 0.2
LEG_LENGTH_RANGE = (0.4, 1.0)
GRAVITY = 9.81


@dataclass
class RigidBodyModelState:
    q: np.ndarray
    q_dot: np.ndarray
    mass_matrix: np.ndarray
    bias: np.ndarray  # Coriolis + gravity
    contact_jacobians: np.ndarray  # stacked (force_dim * n_c, n)
    contact_jdot_qdot: np.ndarray
    floating_dim: int
    actuated: np.ndarray  # indices of actuated coordinates

    def __post_init__(self):
        n = self.mass_matrix.shape[0]
        if self.mass_matrix.shape != (n, n):
            raise ValueError("mass matrix must be square")
        if np.max(np.abs(self.mass_matrix - self.mass_matrix.T)) > 1e-9:
            raise ValueError("mass matrix must be symmetric")
        if len(self.actuated) != n - self.floating_dim:
            raise ValueError("actuated coordinates must cover all non-floating DoF")

    @property
    def n(self) -> int:
        return self.mass_matrix.shape[0]


@dataclass
class Task:
    jacobian: np.ndarray
    jdot_qdot: np.ndarray
    command: np.ndarray
    weight: np.ndarray  # per-row weights

    def __post_init__(self):
        self.jacobian = np.atleast_2d(np.asarray(self.jacobian, dtype=float))
        self.jdot_qdot = np.asarray(self.jdot_qdot, dtype=float).reshape(-1)
        self.command = np.asarray(self.command, dtype=float).reshape(-1)
        w = np.asarray(self.weight, dtype=float)
        self.weight = np.full(self.jacobian.shape[0], float(w)) if w.ndim == 0 else w.reshape(-1)
        k = self.jacobian.shape[0]
        if self.jdot_qdot.shape[0] != k or self.command.shape[0] != k or self.weight.shape[0] != k:
            raise ValueError("task dimensions inconsistent")
        if np.any(self.weight < 0):
            raise ValueError("task weights must be nonnegative")


@dataclass
class WbcProblem:
    model: RigidBodyModelState
    tasks: list[Task]
    friction_mu: float = 0.7
    torque_min: np.ndarray | None = None
    torque_max: np.ndarray | None = None
    force_dim: int = 2  # 2 planar, 3 spatial
    force_regularization: float = 1e-6

    def __post_init__(self):
        if self.friction_mu <= 0:
            raise ValueError("friction coefficient must be positive")
        na = len(self.model.actuated)
        if self.torque_min is None:
            self.torque_min = np.full(na, -500.0)
        if self.torque_max is None:
            self.torque_max = np.full(na, 500.0)
        self.torque_min = np.asarray(self.torque_min, dtype=float).reshape(-1)
        self.torque_max = np.asarray(self.torque_max, dtype=float).reshape(-1)
        if np.any(self.torque_min >= self.torque_max):
            raise ValueError("torque_min must be < torque_max elementwise")


def linear_task_command(x_des, x, v_des, v, a_des, kp, kd) -> np.ndarray:
    """PD-with-feedforward acceleration command for a linear task."""
    x_des, x = np.asarray(x_des, dtype=float), np.asarray(x, dtype=float)
    v_des, v = np.asarray(v_des, dtype=float), np.asarray(v, dtype=float)
    return np.asarray(a_des, dtype=float) + np.atleast_1d(kp) * (x_des - x) + np.atleast_1d(kd) * (
        v_des - v
    )


def rotation_to_axis_angle(rot: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, stable near 0 and pi.

    Goes through the quaternion (Shepperd's method) to avoid the usual
    acos/skew breakdown at large angles.
    """
    r = np.asarray(rot, dtype=float)
    if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9:
        raise ValueError("input is not a rotation matrix")
    tr = np.trace(r)
    if tr >= max(r[0, 0], r[1, 1], r[2, 2]):
        w = 0.5 * math.sqrt(max(1.0 + tr, 0.0))
        v = np.array(
            [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]
        ) / (4.0 * w)
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(1.0 + r[i, i] - r[j, j] - r[k, k], 0.0))
        v = np.zeros(3)
        v[i] = 0.5 * s
        w = (r[k, j] - r[j, k]) / (2.0 * s)
        v[j] = (r[j, i] + r[i, j]) / (2.0 * s)
        v[k] = (r[k, i] + r[i, k]) / (2.0 * s)
    norm_v = float(np.linalg.norm(v))
    if norm_v < 1e-15:
        return np.zeros(3)
    angle = 2.0 * math.atan2(norm_v, w)
    if angle > math.pi:
        angle -= 2.0 * math.pi
    return angle * v / norm_v


def angular_task_command(r_des, r, w_des, w, wdot_des, kp, kd) -> np.ndarray:
    """PD command for an orientation task using the axis-angle error."""
    err = rotation_to_axis_angle(np.asarray(r_des) @ np.asarray(r).T)
    return (
        np.asarray(wdot_des, dtype=float)
        + np.atleast_1d(kp) * err
        + np.atleast_1d(kd) * (np.asarray(w_des, dtype=float) - np.asarray(w, dtype=float))
    )


def friction_pyramid(mu: float, n_contacts: int, planar: bool = False) -> np.ndarray:
    """Linear inner approximation of the friction cone, rows P with P f <= 0."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if planar:
        block = np.array([[0.0, -1.0], [1.0, -mu], [-1.0, -mu]])
    else:
        s = mu / math.sqrt(2.0)
        block = np.array(
            [
                [0.0, 0.0, -1.0],
                [1.0, 0.0, -s],
                [-1.0, 0.0, -s],
                [0.0, 1.0, -s],
                [0.0, -1.0, -s],
            ]
        )
    dim = block.shape[1]
    out = np.zeros((block.shape[0] * n_contacts, dim * n_contacts))
    for c in range(n_contacts):
        out[
            c * block.shape[0] : (c + 1) * block.shape[0], c * dim : (c + 1) * dim
        ] = block
    return out


def assemble_wbc_qp(problem: WbcProblem) -> QpProblem:
    """Stack tasks and constraints into one QP over (q_ddot, contact forces)."""
    model = problem.model
    n = model.n
    fd = model.floating_dim
    jc = model.contact_jacobians
    nf = jc.shape[0]
    n_contacts = nf // problem.force_dim
    nv = n + nf

    h = np.zeros((nv, nv))
    g = np.zeros(nv)
    for task in problem.tasks:
        jw = task.jacobian * task.weight[:, None]
        h[:n, :n] += 2.0 * task.jacobian.T @ jw
        g[:n] += 2.0 * jw.T @ (task.jdot_qdot - task.command)
    h[n:, n:] += 2.0 * problem.force_regularization * np.eye(nf)

    m_f = model.mass_matrix[:fd]
    eq = np.zeros((fd, nv))
    eq[:, :n] = m_f
    eq[:, n:] = -jc[:, :fd].T
    eq_rhs = -model.bias[:fd]

    pyramid = friction_pyramid(problem.friction_mu, n_contacts, planar=problem.force_dim == 2)
    act = model.actuated
    m_a = model.mass_matrix[act]
    j_a = jc[:, act]
    rows_p = pyramid.shape[0]
    na = len(act)
    ineq = np.zeros((rows_p + na, nv))
    ineq[:rows_p, n:] = pyramid
    ineq[rows_p:, :n] = m_a
    ineq[rows_p:, n:] = -j_a.T
    lower = np.concatenate([np.full(rows_p, -np.inf), problem.torque_min - model.bias[act]])
    upper = np.concatenate([np.zeros(rows_p), problem.torque_max - model.bias[act]])
    return QpProblem(
        hessian=h,
        gradient=g,
        eq_matrix=eq,
        eq_rhs=eq_rhs,
        ineq_matrix=ineq,
        ineq_lower=lower,
        ineq_upper=upper,
    )


def split_solution(problem: WbcProblem, solution: QpSolution) -> tuple[np.ndarray, np.ndarray]:
    n = problem.model.n
    return solution.x[:n], solution.x[n:]


def extract_torques(model: RigidBodyModelState, q_ddot: np.ndarray, forces: np.ndarray) -> np.ndarray:
    """Joint torques realizing (q_ddot, forces) under the full dynamics."""
    act = model.actuated
    return (
        model.mass_matrix[act] @ q_ddot
        + model.bias[act]
        - model.contact_jacobians[:, act].T @ forces
    )


def solve_wbc(
    problem: WbcProblem, solver: ActiveSetQp | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, QpSolution]:
    qp = assemble_wbc_qp(problem)
    sol = (solver or ActiveSetQp()).solve(qp)
    qdd, forces = split_solution(problem, sol)
    tau = extract_torques(problem.model, qdd, forces)
    return qdd, forces, tau, sol


# ---------------------------------------------------------------------------
# planar analytic test model


def _leg_kinematics(q, q_dot, leg: int):
    """Foot position, Jacobian and Jdot*qdot for one leg (0 left, 1 right)."""
    x, z, th = q[0], q[1], q[2]
    phi, length = q[3 + 2 * leg], q[4 + 2 * leg]
    alpha = th + phi
    sa, ca = math.sin(alpha), math.cos(alpha)
    u = np.array([sa, -ca])
    up = np.array([ca, sa])
    pos = np.array([x + length * sa, z - length * ca])
    jac = np.zeros((2, 7))
    jac[0, 0] = 1.0
    jac[1, 1] = 1.0
    jac[:, 2] = length * up
    jac[:, 3 + 2 * leg] = length * up
    jac[:, 4 + 2 * leg] = u
    alpha_dot = q_dot[2] + q_dot[3 + 2 * leg]
    len_dot = q_dot[4 + 2 * leg]
    jdot_qdot = 2.0 * len_dot * alpha_dot * up - length * alpha_dot**2 * u
    return pos, jac, jdot_qdot


def planar_slider_model(
    q: np.ndarray,
    q_dot: np.ndarray,
    contacts: tuple[int, ...] = (0, 1),
    gravity: float = GRAVITY,
) -> RigidBodyModelState:
    """Analytic planar biped: base (x, z, pitch) plus hip pitch and a
    prismatic slide per leg, leg mass lumped at the point foot."""
    q = np.asarray(q, dtype=float).reshape(7)
    q_dot = np.asarray(q_dot, dtype=float).reshape(7)
    for leg in range(2):
        length = q[4 + 2 * leg]
        if not (LEG_LENGTH_RANGE[0] < length < LEG_LENGTH_RANGE[1]):
            raise ValueError(
                f"leg {leg} length {length} outside {LEG_LENGTH_RANGE}"
            )
    mass = np.zeros((7, 7))
    mass[0, 0] = mass[1, 1] = PELVIS_MASS
    mass[2, 2] = PELVIS_INERTIA
    bias = np.zeros(7)
    bias[1] = PELVIS_MASS * gravity
    jacs = []
    jds = []
    for leg in range(2):
        _, jac, jdot_qdot = _leg_kinematics(q, q_dot, leg)
        mass += LEG_MASS * jac.T @ jac
        bias += LEG_MASS * jac.T @ jdot_qdot + LEG_MASS * gravity * jac[1]
        jacs.append(jac)
        jds.append(jdot_qdot)
    jc = np.vstack([jacs[c] for c in contacts]) if contacts else np.zeros((0, 7))
    jd = np.concatenate([jds[c] for c in contacts]) if contacts else np.zeros(0)
    return RigidBodyModelState(
        q=q,
        q_dot=q_dot,
        mass_matrix=mass,
        bias=bias,
        contact_jacobians=jc,
        contact_jdot_qdot=jd,
        floating_dim=3,
        actuated=np.arange(3, 7),
    )


def planar_foot_position(q, leg: int) -> np.ndarray:
    pos, _, _ = _leg_kinematics(np.asarray(q, dtype=float), np.zeros(7), leg)
    return pos


def planar_energy(q, q_dot, gravity: float = GRAVITY) -> float:
    """Total mechanical energy of the planar test model."""
    model = planar_slider_model(q, q_dot, contacts=())
    kinetic = 0.5 * q_dot @ model.mass_matrix @ q_dot
    potential = PELVIS_MASS * gravity * q[1]
    for leg in range(2):
        potential += LEG_MASS * gravity * planar_foot_position(q, leg)[1]
    return float(kinetic + potential)


def planar_forward_dynamics(q, q_dot, tau, forces, contacts=(0, 1), gravity: float = GRAVITY):
    """q_ddot from torques and contact forces under the full dynamics."""
    model = planar_slider_model(q, q_dot, contacts=contacts, gravity=gravity)
    rhs = -model.bias + model.contact_jacobians.T @ np.asarray(forces, dtype=float)
    rhs[model.actuated] += np.asarray(tau, dtype=float)
    return np.linalg.solve(model.mass_matrix, rhs)
