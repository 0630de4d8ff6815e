"""Dense convex QP solver (primal active set) for small planner/WBC problems.

Solves

    min  1/2 x' H x + g' x
    s.t. A x = b
         l <= C x <= u

with a primal active-set method.  Problems here are tiny (<= ~40 variables),
so each working-set change re-solves a dense KKT system directly instead of
maintaining an incremental factorization.  Warm starting reuses the previous
iterate (and the constraints active at it), which is what makes re-solving
the same MPC problem every millisecond cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog


class QpStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass
class QpProblem:
    """One QP instance.  The Hessian is symmetrized on construction.

    Equality/inequality blocks may be omitted (None) for unconstrained or
    partially constrained problems.
    """

    hessian: np.ndarray
    gradient: np.ndarray
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_matrix: np.ndarray | None = None
    ineq_lower: np.ndarray | None = None
    ineq_upper: np.ndarray | None = None

    def __post_init__(self):
        H = np.asarray(self.hessian, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"hessian must be square, got shape {H.shape}")
        self.hessian = 0.5 * (H + H.T)
        self.gradient = np.asarray(self.gradient, dtype=float).reshape(-1)
        n = self.n
        if self.gradient.shape[0] != n:
            raise ValueError("gradient length does not match hessian")
        if self.eq_matrix is None:
            self.eq_matrix = np.zeros((0, n))
            self.eq_rhs = np.zeros(0)
        else:
            self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=float))
            self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
            if self.eq_matrix.shape != (self.eq_rhs.shape[0], n):
                raise ValueError("equality block dimensions inconsistent")
        if self.ineq_matrix is None:
            self.ineq_matrix = np.zeros((0, n))
            self.ineq_lower = np.zeros(0)
            self.ineq_upper = np.zeros(0)
        else:
            self.ineq_matrix = np.atleast_2d(np.asarray(self.ineq_matrix, dtype=float))
            self.ineq_lower = np.asarray(self.ineq_lower, dtype=float).reshape(-1)
            self.ineq_upper = np.asarray(self.ineq_upper, dtype=float).reshape(-1)
            m = self.ineq_matrix.shape[0]
            if self.ineq_matrix.shape[1] != n:
                raise ValueError("inequality matrix width does not match hessian")
            if self.ineq_lower.shape[0] != m or self.ineq_upper.shape[0] != m:
                raise ValueError("inequality bound dimensions inconsistent")
            if np.any(self.ineq_lower > self.ineq_upper + 1e-12):
                raise ValueError("ineq_lower must be <= ineq_upper elementwise")

    @property
    def n(self) -> int:
        return self.hessian.shape[0]

    @property
    def n_eq(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_matrix.shape[0]


@dataclass
class QpSolution:
    x: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray  # signed: > 0 upper bound active, < 0 lower bound
    status: QpStatus
    iterations: int = 0


_FEAS_TOL = 1e-9
_ZERO_STEP = 1e-11
_DUAL_TOL = 1e-10


def kkt_residual(problem: QpProblem, solution: QpSolution) -> float:
    """Max of stationarity, primal feasibility, and complementarity residuals."""
    x = solution.x
    lam = solution.eq_duals
    mu = solution.ineq_duals
    A, b = problem.eq_matrix, problem.eq_rhs
    C, lo, up = problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper

    stat = problem.hessian @ x + problem.gradient
    if A.shape[0]:
        stat = stat + A.T @ lam
    if C.shape[0]:
        stat = stat + C.T @ mu
    stationarity = float(np.max(np.abs(stat))) if stat.size else 0.0

    primal = 0.0
    if A.shape[0]:
        primal = float(np.max(np.abs(A @ x - b)))
    if C.shape[0]:
        cx = C @ x
        primal = max(
            primal,
            float(np.max(np.maximum(lo - cx, 0.0), initial=0.0)),
            float(np.max(np.maximum(cx - up, 0.0), initial=0.0)),
        )

    comp = 0.0
    if C.shape[0]:
        cx = C @ x
        gap_up = np.abs(up - cx)
        gap_lo = np.abs(cx - lo)
        comp_vec = np.where(mu >= 0.0, mu * gap_up, -mu * gap_lo)
        comp = float(np.max(comp_vec, initial=0.0))

    return max(stationarity, primal, comp)


class ActiveSetQp:
    """Primal active-set solver with a reusable workspace.

    One instance is single-threaded; independent instances share no state.
    The instance remembers the last working set so that a warm-started
    re-solve of a similar problem starts from the correct active set.
    """

    def __init__(self, max_iter: int = 200, ridge: float = 1e-10):
        self.max_iter = max_iter
        self.ridge = ridge
        self._last_active: list[tuple[int, int]] = []  # (index, side) pairs

    def solve(self, problem: QpProblem, warm_start: np.ndarray | None = None) -> QpSolution:
        n = problem.n
        if n < 1:
            raise ValueError("problem must have at least one variable")
        if problem.n_ineq == 0:
            return self._solve_equality(problem)

        x0 = self._feasible_start(problem, warm_start)
        if x0 is None:
            return QpSolution(
                x=np.zeros(n),
                eq_duals=np.zeros(problem.n_eq),
                ineq_duals=np.zeros(problem.n_ineq),
                status=QpStatus.INFEASIBLE,
            )
        return self._active_set_iterate(problem, x0)

    # -- internals ---------------------------------------------------------

    def _solve_equality(self, problem: QpProblem) -> QpSolution:
        """Direct KKT solve when there are no inequality constraints."""
        n, me = problem.n, problem.n_eq
        H, g = problem.hessian, problem.gradient
        A, b = problem.eq_matrix, problem.eq_rhs
        kkt = np.zeros((n + me, n + me))
        kkt[:n, :n] = H
        if me:
            kkt[:n, n:] = A.T
            kkt[n:, :n] = A
        rhs = np.concatenate([-g, b])
        sol = self._kkt_solve(kkt, rhs, n)
        if sol is None:
            return QpSolution(
                x=np.zeros(n),
                eq_duals=np.zeros(me),
                ineq_duals=np.zeros(0),
                status=QpStatus.INFEASIBLE,
            )
        x, lam = sol[:n], sol[n:]
        if me and np.max(np.abs(A @ x - b)) > 1e-7:
            # inconsistent equality constraints
            return QpSolution(
                x=x, eq_duals=lam, ineq_duals=np.zeros(0), status=QpStatus.INFEASIBLE
            )
        return QpSolution(
            x=x, eq_duals=lam, ineq_duals=np.zeros(0), status=QpStatus.OPTIMAL, iterations=1
        )

    def _kkt_solve(self, kkt: np.ndarray, rhs: np.ndarray, n: int) -> np.ndarray | None:
        """Solve the KKT system, falling back to ridge-regularized least squares."""
        try:
            sol = np.linalg.solve(kkt, rhs)
            if np.all(np.isfinite(sol)) and np.max(np.abs(kkt @ sol - rhs)) < 1e-6 * (
                1.0 + np.max(np.abs(rhs), initial=0.0)
            ):
                return sol
        except np.linalg.LinAlgError:
            pass
        reg = kkt.copy()
        reg[:n, :n] += self.ridge * np.eye(n)
        sol, *_ = np.linalg.lstsq(reg, rhs, rcond=None)
        if not np.all(np.isfinite(sol)):
            return None
        return sol

    def _feasible_start(
        self, problem: QpProblem, warm_start: np.ndarray | None
    ) -> np.ndarray | None:
        A, b = problem.eq_matrix, problem.eq_rhs
        C, lo, up = problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper
        n = problem.n

        def feasible(x):
            if A.shape[0] and np.max(np.abs(A @ x - b)) > _FEAS_TOL:
                return False
            cx = C @ x
            return bool(np.all(cx >= lo - _FEAS_TOL) and np.all(cx <= up + _FEAS_TOL))

        if warm_start is not None:
            x = np.asarray(warm_start, dtype=float).reshape(-1)
            if x.shape[0] == n and feasible(x):
                return x

        # least-squares push toward the middle of the box, respecting equalities
        target = np.where(
            np.isfinite(lo) & np.isfinite(up),
            0.5 * (lo + up),
            np.where(np.isfinite(lo), lo + 1.0, np.where(np.isfinite(up), up - 1.0, 0.0)),
        )
        Hls = C.T @ C + 1e-8 * np.eye(n)
        gls = -C.T @ target
        me = A.shape[0]
        kkt = np.zeros((n + me, n + me))
        kkt[:n, :n] = Hls
        if me:
            kkt[:n, n:] = A.T
            kkt[n:, :n] = A
        sol = self._kkt_solve(kkt, np.concatenate([-gls, b]), n)
        if sol is not None and feasible(sol[:n]):
            return sol[:n]

        return self._phase_one(problem, feasible)

    def _phase_one(self, problem: QpProblem, feasible) -> np.ndarray | None:
        """LP phase-1: minimize a shared slack on all inequality violations."""
        A, b = problem.eq_matrix, problem.eq_rhs
        C, lo, up = problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper
        n, mi = problem.n, problem.n_ineq
        ones = np.ones((mi, 1))
        rows = []
        rhs = []
        fin_up = np.isfinite(up)
        fin_lo = np.isfinite(lo)
        if np.any(fin_up):
            rows.append(np.hstack([C[fin_up], -ones[fin_up]]))
            rhs.append(up[fin_up])
        if np.any(fin_lo):
            rows.append(np.hstack([-C[fin_lo], -ones[fin_lo]]))
            rhs.append(-lo[fin_lo])
        A_ub = np.vstack(rows) if rows else None
        b_ub = np.concatenate(rhs) if rhs else None
        A_eq = np.hstack([A, np.zeros((A.shape[0], 1))]) if A.shape[0] else None
        cost = np.zeros(n + 1)
        cost[-1] = 1.0
        res = linprog(
            cost,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b if A.shape[0] else None,
            bounds=[(None, None)] * n + [(0, None)],
            method="highs",
        )
        if not res.success or res.x[-1] > 1e-7:
            return None
        x = res.x[:n]
        if feasible(x):
            return x
        # nudge strictly inside by clipping tiny violations
        return x if kkt_residual_primal_only(problem, x) < 1e-6 else None

    def _active_set_iterate(self, problem: QpProblem, x0: np.ndarray) -> QpSolution:
        n, me, mi = problem.n, problem.n_eq, problem.n_ineq
        H, g = problem.hessian, problem.gradient
        A, b = problem.eq_matrix, problem.eq_rhs
        C, lo, up = problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper

        x = x0.copy()
        cx = C @ x
        working: list[tuple[int, int]] = []
        # seed working set from cached set, then from exactly active constraints
        seen = set()
        for idx, side in self._last_active:
            if idx >= mi:
                continue
            bound = up[idx] if side > 0 else lo[idx]
            if np.isfinite(bound) and abs(cx[idx] - bound) <= 1e-8 and idx not in seen:
                working.append((idx, side))
                seen.add(idx)
        for idx in range(mi):
            if idx in seen:
                continue
            if np.isfinite(up[idx]) and abs(cx[idx] - up[idx]) <= _FEAS_TOL:
                working.append((idx, 1))
                seen.add(idx)
            elif np.isfinite(lo[idx]) and abs(cx[idx] - lo[idx]) <= _FEAS_TOL:
                working.append((idx, -1))
                seen.add(idx)
        working.sort()

        iterations = 0
        lam = np.zeros(me)
        mu_full = np.zeros(mi)
        for iterations in range(1, self.max_iter + 1):
            W = [idx for idx, _ in working]
            Cw = C[W] if W else np.zeros((0, n))
            mw = len(W)
            kkt = np.zeros((n + me + mw, n + me + mw))
            kkt[:n, :n] = H
            if me:
                kkt[:n, n : n + me] = A.T
                kkt[n : n + me, :n] = A
            if mw:
                kkt[:n, n + me :] = Cw.T
                kkt[n + me :, :n] = Cw
            grad = H @ x + g
            rhs = np.concatenate([-grad, np.zeros(me + mw)])
            sol = self._kkt_solve(kkt, rhs, n)
            if sol is None:
                # degenerate working set: drop the newest constraint and retry
                if working:
                    working.pop()
                    continue
                return QpSolution(
                    x=x,
                    eq_duals=lam,
                    ineq_duals=mu_full,
                    status=QpStatus.MAX_ITER,
                    iterations=iterations,
                )
            p = sol[:n]
            lam = sol[n : n + me]
            nu = sol[n + me :]

            stationary = np.max(np.abs(p), initial=0.0) <= _ZERO_STEP * (
                1.0 + np.max(np.abs(x), initial=0.0)
            )
            if not stationary:
                # ratio test against constraints not in the working set
                in_w = {idx for idx, _ in working}
                cp = C @ p
                alpha = 1.0
                block: tuple[int, int] | None = None
                for idx in range(mi):
                    if idx in in_w:
                        continue
                    d = cp[idx]
                    if d > 1e-12 and np.isfinite(up[idx]):
                        a = (up[idx] - cx[idx]) / d
                        side = 1
                    elif d < -1e-12 and np.isfinite(lo[idx]):
                        a = (lo[idx] - cx[idx]) / d
                        side = -1
                    else:
                        continue
                    a = max(a, 0.0)
                    if a < alpha - 1e-12:
                        alpha = a
                        block = (idx, side)
                x = x + alpha * p
                cx = C @ x
                if block is not None:
                    working.append(block)
                    continue
                # full unblocked step: x is the working-set minimizer and the
                # multipliers from this solve are its duals, so fall through
                # to the optimality check instead of re-solving

            # stationary on the working set; check multiplier signs
            worst_val = -_DUAL_TOL
            worst_pos = -1
            for pos, ((idx, side), nv) in enumerate(zip(working, nu)):
                signed = nv * side
                if signed < worst_val:
                    worst_val = signed
                    worst_pos = pos
            if worst_pos < 0:
                mu_full = np.zeros(mi)
                for (idx, side), nv in zip(working, nu):
                    mu_full[idx] = nv
                self._last_active = list(working)
                return QpSolution(
                    x=x,
                    eq_duals=lam,
                    ineq_duals=mu_full,
                    status=QpStatus.OPTIMAL,
                    iterations=iterations,
                )
            working.pop(worst_pos)

        mu_full = np.zeros(mi)
        self._last_active = list(working)
        return QpSolution(
            x=x,
            eq_duals=lam,
            ineq_duals=mu_full,
            status=QpStatus.MAX_ITER,
            iterations=iterations,
        )


def kkt_residual_primal_only(problem: QpProblem, x: np.ndarray) -> float:
    A, b = problem.eq_matrix, problem.eq_rhs
    C, lo, up = problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper
    primal = 0.0
    if A.shape[0]:
        primal = float(np.max(np.abs(A @ x - b)))
    if C.shape[0]:
        cx = C @ x
        primal = max(
            primal,
            float(np.max(np.maximum(lo - cx, 0.0), initial=0.0)),
            float(np.max(np.maximum(cx - up, 0.0), initial=0.0)),
        )
    return primal


def solve_qp(
    problem: QpProblem,
    warm_start: np.ndarray | None = None,
    solver: ActiveSetQp | None = None,
) -> QpSolution:
    """Convenience wrapper; allocates a fresh solver unless one is supplied."""
    if solver is None:
        solver = ActiveSetQp()
    return solver.solve(problem, warm_start=warm_start)
