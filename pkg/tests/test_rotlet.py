# FILE: tests/test_rotlet.py
from __future__ import annotations

import numpy as np
import pytest

from core.errors import SingularEvaluation
from core.flow.rotlet import regularization, rotlet_kernel, rotlet_velocity, superposed_velocity, velocity_field
from core.flow.state import RotorConfig
from core.geometry.vec2 import Vec2


def test_unit_rotlet_points_clockwise_for_positive_strength():
    u = rotlet_velocity(Vec2(1.0, 0.0), Vec2(0.0, 0.0), 2.0)
    assert u.x == pytest.approx(0.0)
    assert u.y == pytest.approx(-2.0)


def test_rotlet_is_minus_strength_times_perp_over_r_squared():
    d = Vec2(0.3, -1.2)
    u = rotlet_velocity(d, Vec2(0.0, 0.0), 0.7)
    expected = d.perp().as_array() * (-0.7 / d.dot(d))
    np.testing.assert_allclose(u.as_array(), expected, rtol=1e-14)
    assert d.perp().dot(d) == 0.0


def test_kernel_is_perpendicular_with_inverse_distance_magnitude(rng):
    d = rng.normal(size=(50, 2))
    val, _, _ = rotlet_kernel(d)
    np.testing.assert_allclose(np.einsum("ik,ik->i", val, d), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(val, axis=1), 1.0 / np.linalg.norm(d, axis=1), rtol=1e-12)


def test_kernel_is_divergence_free(rng):
    d = rng.normal(size=(20, 2))
    _, grad, _ = rotlet_kernel(d, order=1)
    np.testing.assert_allclose(grad[:, 0, 0] + grad[:, 1, 1], 0.0, atol=1e-12)


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_kernel_derivatives_match_finite_differences(fd_jacobian, eps):
    d = np.array([0.7, -0.4])
    val, grad, hess = rotlet_kernel(d, eps, order=2)
    num_grad = fd_jacobian(lambda x: rotlet_kernel(x, eps)[0], d)
    np.testing.assert_allclose(grad, num_grad, rtol=1e-6, atol=1e-8)
    num_hess = fd_jacobian(lambda x: rotlet_kernel(x, eps, order=1)[1], d)
    np.testing.assert_allclose(hess, num_hess, rtol=1e-5, atol=1e-7)
    # symmetric in the two derivative axes
    np.testing.assert_allclose(hess, hess.transpose(0, 2, 1), atol=1e-12)


def test_blob_kernel_is_finite_at_the_center():
    val, _, _ = rotlet_kernel(np.zeros(2), eps=0.1)
    np.testing.assert_array_equal(val, np.zeros(2))


def test_singular_evaluation_raises_without_guard():
    with pytest.raises(SingularEvaluation) as exc:
        rotlet_velocity(Vec2(0.0, 1e-6), Vec2(0.0, 0.0), 1.0)
    assert exc.value.distance == pytest.approx(1e-6)
    assert exc.value.r_min == pytest.approx(1e-4)


def test_guard_clamps_and_reports_near_pairs():
    r2 = np.array([1e-12, 1.0])
    eps_eff, near = regularization(r2, 0.0, 1e-4, guard=True)
    np.testing.assert_array_equal(near, [True, False])
    np.testing.assert_allclose(eps_eff, [1e-4, 0.0])


def test_positive_eps_never_raises():
    eps_eff, near = regularization(np.array([0.0]), 0.05, 1e-4, guard=False)
    assert not near.any()
    assert eps_eff[0] == pytest.approx(0.05)


def test_velocity_field_is_linear_superposition(rng):
    pts = rng.uniform(-2.0, 2.0, size=(7, 3, 2))
    rotors = np.array([[0.1, 0.2], [-0.5, 0.4]])
    g = np.array([1.5, -0.7])
    both, near = velocity_field(pts, rotors, g)
    a, _ = velocity_field(pts, rotors[:1], g[:1])
    b, _ = velocity_field(pts, rotors[1:], g[1:])
    np.testing.assert_allclose(both, a + b, rtol=1e-12)
    assert near.shape == (7, 3)
    assert not near.any()


def test_superposed_velocity_matches_field():
    rotors = RotorConfig.of([(0.0, 0.0), (1.0, 1.0)], [1.0, 2.0])
    p = Vec2(0.3, -0.2)
    u = superposed_velocity(p, rotors)
    ref, _ = velocity_field(p.as_array(), rotors.position_array(), rotors.strength_array())
    assert (u.x, u.y) == pytest.approx((ref[0], ref[1]))


@pytest.mark.parametrize("point,strength,expected", [
    ((1.0, 0.0), 1.0, (0.0, -1.0)),
    ((0.0, 2.0), 1.0, (0.5, 0.0)),
    ((0.3, -0.7), 0.0, (0.0, 0.0)),
])
def test_single_rotor_examples(point, strength, expected):
    u = rotlet_velocity(Vec2(*point), Vec2(0.0, 0.0), strength)
    assert (u.x, u.y) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("strengths,expected", [
    ([1.0, 1.0], (0.0, 0.0)),
    ([1.0, -1.0], (0.0, -2.0)),
])
def test_symmetric_pair_at_the_midpoint(strengths, expected):
    rotors = RotorConfig.of([(-1.0, 0.0), (1.0, 0.0)], strengths)
    u = superposed_velocity(Vec2(0.0, 0.0), rotors)
    assert (u.x, u.y) == pytest.approx(expected, abs=1e-15)


def test_single_rotor_superposition_is_the_rotlet():
    rotors = RotorConfig.of([(0.4, -0.2)], [1.3])
    p = Vec2(-0.5, 0.9)
    u = superposed_velocity(p, rotors)
    v = rotlet_velocity(p, Vec2(0.4, -0.2), 1.3)
    assert (u.x, u.y) == pytest.approx((v.x, v.y), rel=1e-14)


def test_superposed_field_has_no_numerical_divergence(rng):
    pos = np.array([[0.0, 0.0], [1.0, 0.5], [-0.8, 0.7]])
    rotors = RotorConfig.of(pos, rng.uniform(-1.0, 1.0, 3))
    h = 1e-5
    checked = 0
    while checked < 50:
        p = rng.uniform(-2.0, 2.0, 2)
        if np.min(np.linalg.norm(pos - p, axis=1)) < 0.25:
            continue
        ux = [superposed_velocity(Vec2(p[0] + s, p[1]), rotors).x for s in (h, -h)]
        uy = [superposed_velocity(Vec2(p[0], p[1] + s), rotors).y for s in (h, -h)]
        div = (ux[0] - ux[1]) / (2 * h) + (uy[0] - uy[1]) / (2 * h)
        assert abs(div) < 1e-6
        checked += 1
