# FILE: tests/test_ddp_solver.py
from __future__ import annotations

import numpy as np
import pytest

from core.cost.moment_cost import CostGradients
from core.ddp.solver import backward_pass, forward_pass, rollout, solve
from core.ddp.types import (BackwardResult, DdpOptions, FeedbackPolicy, HessianMode, NoImprovement,
                            default_schedule)
from core.errors import MaxItersReached, NotPositiveDefinite
from sim.config import RunConfig
from sim.scenario import build_scenario


class LinearQuadraticProblem:
    """x+ = A x + B u with cost sum x'Qx + u'Ru + x_H' Qf x_H."""

    def __init__(self, A, B, Q, R, Qf, x0, horizon):
        self.A, self.B = np.asarray(A, float), np.asarray(B, float)
        self.Q, self.R, self.Qf = np.asarray(Q, float), np.asarray(R, float), np.asarray(Qf, float)
        self.x0 = np.asarray(x0, float)
        self.horizon = horizon
        self.control_dim = self.B.shape[1]

    def step(self, x, u):
        return self.A @ x + self.B @ u

    def linearize(self, x, u):
        return self.A, self.B

    def second_order(self, x, u, v):
        n, m = self.B.shape
        return np.zeros((n, n)), np.zeros((n, m)), np.zeros((m, m))

    def stage_cost(self, x, u):
        return float(x @ self.Q @ x + u @ self.R @ u)

    def terminal_cost(self, x):
        return float(x @ self.Qf @ x)

    def stage_gradients(self, x, u):
        n, m = self.B.shape
        return CostGradients(l_X=2 * self.Q @ x, l_XX=2 * self.Q, l_u=2 * self.R @ u, l_uu=2 * self.R,
                             l_Xu=np.zeros((n, m)))

    def terminal_gradients(self, x):
        n, m = self.B.shape
        return CostGradients(l_X=2 * self.Qf @ x, l_XX=2 * self.Qf, l_u=np.zeros(m), l_uu=np.zeros((m, m)),
                             l_Xu=np.zeros((n, m)))


def _problem(R=None, B=None, horizon=12) -> LinearQuadraticProblem:
    A = np.array([[1.0, 0.1], [-0.05, 0.98]])
    B = np.array([[0.0], [0.1]]) if B is None else B
    R = np.array([[0.5]]) if R is None else R
    return LinearQuadraticProblem(A, B, np.diag([1.0, 0.2]), R, np.diag([10.0, 1.0]), [1.0, -0.5], horizon)


def _riccati(p: LinearQuadraticProblem) -> tuple[float, list[np.ndarray]]:
    P = p.Qf
    gains = []
    for _ in range(p.horizon - 1):
        S = p.R + p.B.T @ P @ p.B
        K = -np.linalg.solve(S, p.B.T @ P @ p.A)
        P = p.Q + p.A.T @ P @ p.A + p.A.T @ P @ p.B @ K
        gains.append(K)
    return float(p.x0 @ P @ p.x0), gains[::-1]


def _options(**kw) -> DdpOptions:
    base = dict(max_iters=20, cost_tol=1e-10, reg_init=1e-9, reg_min=1e-9)
    base.update(kw)
    return DdpOptions(**base)


def test_solution_matches_riccati_optimum():
    p = _problem()
    optimum, gains = _riccati(p)
    res = solve(p, _options())
    assert res.report.converged
    assert res.trajectory.total_cost == pytest.approx(optimum, rel=1e-7)
    np.testing.assert_allclose(res.policy.K[0], gains[0], rtol=1e-6)


def test_first_full_step_is_exact_for_linear_quadratic_problems():
    p = _problem()
    optimum, _ = _riccati(p)
    traj = rollout(p, np.zeros((p.horizon - 1, 1)))
    bw = backward_pass(p, traj, 1e-12)
    assert bw.expected_improvement(1.0) == pytest.approx(traj.total_cost - optimum, rel=1e-8)
    fw = forward_pass(p, traj, bw, default_schedule())
    assert not isinstance(fw, NoImprovement)
    new, alpha = fw
    assert alpha == 1.0
    assert new.total_cost == pytest.approx(optimum, rel=1e-8)


def test_full_hessian_mode_agrees_when_dynamics_are_linear():
    p = _problem()
    gn = solve(p, _options())
    full = solve(p, _options(hessian_mode=HessianMode.FULL))
    assert full.trajectory.total_cost == pytest.approx(gn.trajectory.total_cost, rel=1e-10)


def test_cost_history_decreases_and_regularization_shrinks():
    p = _problem(horizon=30)
    res = solve(p, _options(reg_init=1e-2))
    hist = res.cost_history
    assert len(hist) >= 2
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert res.report.final_reg < 1e-2
    assert res.report.accepted_stepsizes


def test_indefinite_control_hessian_raises_with_step():
    p = _problem(R=np.array([[-1.0]]), B=np.zeros((2, 1)))
    traj = rollout(p, np.zeros((p.horizon - 1, 1)))
    with pytest.raises(NotPositiveDefinite) as exc:
        backward_pass(p, traj, 1e-6)
    assert exc.value.step == p.horizon - 2


def test_zero_policy_yields_no_improvement():
    p = _problem()
    traj = rollout(p, np.zeros((p.horizon - 1, 1)))
    bw = BackwardResult(FeedbackPolicy.zeros(p.horizon, 1, 2), 0.0, 0.0)
    out = forward_pass(p, traj, bw, default_schedule(3))
    assert isinstance(out, NoImprovement)
    assert out.tried == 4


def test_iteration_cap():
    p = _problem()
    res = solve(p, _options(max_iters=1))
    assert res.report.max_iters_reached
    assert not res.report.converged
    with pytest.raises(MaxItersReached) as exc:
        solve(p, _options(max_iters=1), strict=True)
    assert exc.value.result.trajectory.total_cost == pytest.approx(res.trajectory.total_cost)


def test_stop_flag_and_progress():
    p = _problem()
    stopped = solve(p, _options(), stop_flag=lambda: True)
    assert stopped.report.reason == "stopped"
    assert not stopped.report.converged

    seen = []
    solve(p, _options(), progress_cb=lambda pct, stage, done, total: seen.append((stage, done)))
    assert seen and seen[0] == ("ddp", 1)


def test_options_validation():
    with pytest.raises(ValueError):
        DdpOptions(stepsize_schedule=(0.5, 1.0))
    with pytest.raises(ValueError):
        DdpOptions(reg_init=1e-12, reg_min=1e-9)
    assert default_schedule(2) == (1.0, 0.5, 0.25)


@pytest.mark.parametrize("max_iters", [1, 3, 20])
def test_returned_policy_is_built_about_the_returned_trajectory(max_iters):
    p = _problem(horizon=30)
    res = solve(p, _options(max_iters=max_iters, reg_init=1e-2))
    fresh = backward_pass(p, res.trajectory, res.report.policy_reg)
    np.testing.assert_array_equal(res.policy.k, fresh.policy.k)
    np.testing.assert_array_equal(res.policy.K, fresh.policy.K)


def test_returned_policy_matches_a_rotor_trajectory(tiny_dict):
    data = tiny_dict(target_mean=[0.9, 1.1])
    data["ddp"]["max_iters"] = 3
    cfg = RunConfig.from_dict(data)
    scen = build_scenario(cfg)
    opts = cfg.ddp.options()
    res = solve(scen.problem, opts)
    assert len(res.cost_history) >= 2
    fresh = backward_pass(scen.problem, res.trajectory, res.report.policy_reg, opts.hessian_mode)
    np.testing.assert_array_equal(res.policy.k, fresh.policy.k)
    np.testing.assert_array_equal(res.policy.K, fresh.policy.K)


def test_feedforward_shrinks_as_regularization_grows():
    p = _problem()
    traj = rollout(p, np.zeros((p.horizon - 1, 1)))
    norms = [np.linalg.norm(backward_pass(p, traj, reg).policy.k) for reg in (1.0, 1e3, 1e6)]
    assert norms[0] > norms[1] > norms[2] > 0.0
    assert norms[2] < 1e-2 * norms[1]
