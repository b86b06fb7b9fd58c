# FILE: tests/test_integrate.py
from __future__ import annotations

import numpy as np
import pytest

from core.errors import SingularEvaluation
from core.flow.integrate import rk4_step, rollout
from core.flow.state import ControlVector, SystemState
from core.flow.systems import RotorSystem


def test_rk4_step_is_fourth_order_accurate():
    rhs = lambda x, u: -x
    x1 = rk4_step(rhs, np.array([1.0]), np.zeros(0), 0.01)
    assert x1[0] == pytest.approx(np.exp(-0.01), abs=1e-11)

    # halving dt cuts the one-step error by about 2^5
    e1 = abs(rk4_step(rhs, np.array([1.0]), np.zeros(0), 0.2)[0] - np.exp(-0.2))
    e2 = abs(rk4_step(rhs, np.array([1.0]), np.zeros(0), 0.1)[0] - np.exp(-0.1))
    assert 25.0 < e1 / e2 < 40.0


def test_rk4_step_accepts_typed_state():
    state = SystemState.of((1.0, 0.0), [(0.0, 0.0)])
    u = ControlVector.velocity([1.0], [0.5], [0.0])
    nxt = rk4_step(RotorSystem(1, "velocity").rhs, state, u, 0.1)
    assert isinstance(nxt, SystemState)
    assert nxt.rotor_x[0] == pytest.approx(0.05)


def test_rk4_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(lambda x, u: x, np.ones(1), np.zeros(0), 0.0)


def test_rollout_shapes():
    out = rollout(lambda x, u: u, np.zeros(2), np.ones((5, 2)), 0.1)
    assert out.shape == (6, 2)
    np.testing.assert_allclose(out[-1], [0.5, 0.5])


def test_rollout_reports_singular_step():
    def rhs(x, u):
        if x[0] > 0.45:
            raise SingularEvaluation(0.0, 1e-4, "test")
        return np.ones_like(x)

    with pytest.raises(SingularEvaluation) as exc:
        rollout(rhs, np.zeros(1), np.zeros((10, 0)), 0.1)
    assert exc.value.step == 4
