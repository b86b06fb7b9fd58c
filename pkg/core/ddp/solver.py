# FILE: core/ddp/solver.py
from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.ddp.problem import TrajectoryProblem
from core.ddp.types import (
    BackwardResult,
    ConvergenceReport,
    DdpOptions,
    FeedbackPolicy,
    HessianMode,
    NoImprovement,
    QExpansion,
    SolveResult,
    Trajectory,
)
from core.errors import MaxItersReached, NotPositiveDefinite, SingularEvaluation

logger = logging.getLogger(__name__)

ProgressCb = Callable[[float, str, int, int], None]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def rollout(problem: TrajectoryProblem, controls: np.ndarray) -> Trajectory:
    controls = np.asarray(controls, dtype=np.float64).reshape(problem.horizon - 1, problem.control_dim)
    H = problem.horizon
    states = np.empty((H, problem.x0.size), dtype=np.float64)
    states[0] = problem.x0
    cost = 0.0
    for t in range(H - 1):
        cost += problem.stage_cost(states[t], controls[t])
        try:
            states[t + 1] = problem.step(states[t], controls[t])
        except SingularEvaluation as e:
            raise e.at_step(t) from e
    cost += problem.terminal_cost(states[-1])
    return Trajectory(states=states, controls=controls.copy(), total_cost=float(cost))


def q_expansion(problem: TrajectoryProblem, x: np.ndarray, u: np.ndarray, V_X: np.ndarray, V_XX: np.ndarray,
                hessian_mode: HessianMode) -> QExpansion:
    F_X, F_u = problem.linearize(x, u)
    g = problem.stage_gradients(x, u)
    VF_X = V_XX @ F_X
    Q_XX = g.l_XX + F_X.T @ VF_X
    Q_uu = g.l_uu + F_u.T @ V_XX @ F_u
    Q_Xu = g.l_Xu + VF_X.T @ F_u
    if hessian_mode is HessianMode.FULL:
        vXX, vXu, vuu = problem.second_order(x, u, V_X)
        Q_XX = Q_XX + vXX
        Q_Xu = Q_Xu + vXu
        Q_uu = Q_uu + vuu
    return QExpansion(
        Q_X=g.l_X + F_X.T @ V_X,
        Q_u=g.l_u + F_u.T @ V_X,
        Q_XX=_sym(Q_XX),
        Q_uu=_sym(Q_uu),
        Q_Xu=Q_Xu,
    )


def backward_pass(problem: TrajectoryProblem, traj: Trajectory, reg: float,
                  hessian_mode: HessianMode | str = HessianMode.GAUSS_NEWTON) -> BackwardResult:
    """
    Value recursion from the terminal cost. Raises NotPositiveDefinite(t) when
    Q_uu + reg*I has no Cholesky factor at step t.
    """
    mode = HessianMode.parse(hessian_mode)
    H = traj.horizon
    n, nc = traj.states.shape[1], problem.control_dim
    term = problem.terminal_gradients(traj.states[-1])
    V_X = term.l_X.copy()
    V_XX = _sym(term.l_XX)

    policy = FeedbackPolicy.zeros(H, nc, n)
    dV1 = 0.0
    dV2 = 0.0
    eye = np.eye(nc)
    for t in range(H - 2, -1, -1):
        q = q_expansion(problem, traj.states[t], traj.controls[t], V_X, V_XX, mode)
        Q_uX = q.Q_Xu.T
        Q_reg = q.Q_uu + reg * eye
        if not np.all(np.isfinite(Q_reg)):
            raise NotPositiveDefinite(t)
        try:
            fac = cho_factor(Q_reg, lower=True, check_finite=False)
        except LinAlgError:
            raise NotPositiveDefinite(t) from None
        k = -cho_solve(fac, q.Q_u, check_finite=False)
        K = -cho_solve(fac, Q_uX, check_finite=False)

        policy.k[t] = k
        policy.K[t] = K
        dV1 += float(k @ q.Q_u)
        dV2 += float(0.5 * k @ q.Q_uu @ k)

        V_X = q.Q_X + K.T @ q.Q_uu @ k + K.T @ q.Q_u + Q_uX.T @ k
        V_XX = _sym(q.Q_XX + K.T @ q.Q_uu @ K + K.T @ Q_uX + Q_uX.T @ K)
    return BackwardResult(policy=policy, dV1=dV1, dV2=dV2)


def forward_pass(problem: TrajectoryProblem, traj: Trajectory, backward: BackwardResult,
                 schedule: tuple[float, ...], armijo: float = 1e-4) -> tuple[Trajectory, float] | NoImprovement:
    """
    Line search over `schedule` with u = u_t + a k_t + K_t (X_new_t - X_t).
    Returns the first acceptable (trajectory, stepsize) or NoImprovement.
    """
    H = traj.horizon
    pol = backward.policy
    tried = 0
    best_expected = 0.0
    for alpha in schedule:
        tried += 1
        expected = backward.expected_improvement(alpha)
        best_expected = max(best_expected, expected)
        if not expected > 0.0:
            continue
        states = np.empty_like(traj.states)
        controls = np.empty_like(traj.controls)
        states[0] = traj.states[0]
        cost = 0.0
        try:
            for t in range(H - 1):
                controls[t] = traj.controls[t] + alpha * pol.k[t] + pol.K[t] @ (states[t] - traj.states[t])
                cost += problem.stage_cost(states[t], controls[t])
                states[t + 1] = problem.step(states[t], controls[t])
            cost += problem.terminal_cost(states[-1])
        except SingularEvaluation as e:
            logger.debug("stepsize %.4g rejected: %s", alpha, e)
            continue
        if not math.isfinite(cost):
            continue
        actual = traj.total_cost - cost
        if actual > 0.0 and actual >= armijo * expected:
            return Trajectory(states=states, controls=controls, total_cost=float(cost)), alpha
    return NoImprovement(tried=tried, expected=best_expected)


def _policy_about(problem: TrajectoryProblem, traj: Trajectory, reg: float,
                  opts: DdpOptions) -> tuple[FeedbackPolicy, float]:
    """Feedback policy linearized about the returned trajectory, raising reg until Q_uu factors."""
    while True:
        try:
            return backward_pass(problem, traj, reg, opts.hessian_mode).policy, reg
        except NotPositiveDefinite as e:
            if reg >= opts.reg_max:
                logger.warning("no feedback policy about the final trajectory (%s); returning zero gains", e)
                return FeedbackPolicy.zeros(traj.horizon, problem.control_dim, traj.states.shape[1]), reg
            reg = opts.clamp_reg(reg * opts.reg_factor)


def solve(problem: TrajectoryProblem, options: DdpOptions | None = None,
          initial_controls: np.ndarray | None = None,
          progress_cb: ProgressCb | None = None,
          stop_flag: Callable[[], bool] | None = None,
          strict: bool = False) -> SolveResult:
    """
    Iterate backward and forward passes with Levenberg regularization on Q_uu
    until the relative cost change falls below options.cost_tol.
    """
    opts = options or DdpOptions()
    H, nc = problem.horizon, problem.control_dim
    u0 = np.zeros((H - 1, nc)) if initial_controls is None else np.asarray(initial_controls, dtype=np.float64)
    traj = rollout(problem, u0)
    history = [traj.total_cost]
    policy = FeedbackPolicy.zeros(H, nc, problem.x0.size)
    policy_traj: Trajectory | None = None
    policy_reg = opts.reg_init
    report = ConvergenceReport(converged=False, iterations=0, reason="", final_reg=opts.reg_init)
    reg = opts.reg_init
    logger.info("DDP start: horizon=%d controls=%d cost=%.6g", H, nc, traj.total_cost)

    for it in range(1, opts.max_iters + 1):
        report.iterations = it
        if stop_flag is not None and stop_flag():
            report.reason = "stopped"
            break

        try:
            bw = backward_pass(problem, traj, reg, opts.hessian_mode)
        except NotPositiveDefinite as e:
            report.rejected_iterations += 1
            if reg >= opts.reg_max:
                report.reason = f"regularization exhausted ({e})"
                break
            reg = opts.clamp_reg(reg * opts.reg_factor)
            logger.debug("iter %d: %s, reg -> %.3g", it, e, reg)
            continue
        policy, policy_traj, policy_reg = bw.policy, traj, reg

        expected = bw.expected_improvement(1.0)
        if expected <= opts.cost_tol * max(abs(traj.total_cost), 1e-12):
            report.converged = True
            report.reason = "expected improvement below tolerance"
            break

        fw = forward_pass(problem, traj, bw, opts.stepsize_schedule, opts.armijo)
        if isinstance(fw, NoImprovement):
            report.rejected_iterations += 1
            if reg >= opts.reg_max:
                report.reason = "line search exhausted at maximum regularization"
                break
            reg = opts.clamp_reg(reg * opts.reg_factor)
            logger.debug("iter %d: no improvement, reg -> %.3g", it, reg)
            continue

        new_traj, alpha = fw
        rel = (traj.total_cost - new_traj.total_cost) / max(abs(traj.total_cost), 1e-12)
        assert new_traj.total_cost < traj.total_cost
        traj = new_traj
        history.append(traj.total_cost)
        report.accepted_stepsizes.append(alpha)
        reg = opts.clamp_reg(reg / opts.reg_decrease)
        logger.debug("iter %d: cost=%.8g step=%.4g reg=%.3g", it, traj.total_cost, alpha, reg)
        if progress_cb is not None:
            progress_cb(100.0 * it / opts.max_iters, "ddp", it, opts.max_iters)
        if rel < opts.cost_tol:
            report.converged = True
            report.reason = "relative cost change below tolerance"
            break
    else:
        report.max_iters_reached = True
        report.reason = "max_iters reached"

    if policy_traj is not traj:
        policy, policy_reg = _policy_about(problem, traj, reg, opts)
    report.final_reg = reg
    report.policy_reg = policy_reg
    logger.info("DDP %s after %d iterations: cost=%.6g (%s)",
                "converged" if report.converged else "stopped", report.iterations, traj.total_cost, report.reason)
    result = SolveResult(trajectory=traj, policy=policy, cost_history=history, report=report)
    if report.max_iters_reached and strict:
        raise MaxItersReached(result, report.iterations)
    return result
