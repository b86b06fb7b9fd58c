# FILE: tests/test_gpc_basis.py
from __future__ import annotations

from math import comb

import numpy as np
import pytest

from core.gpc.basis import MultiIndex, build_basis, hermite_eval
from core.gpc.expansion import GpcState, moments, project_gaussian_initial, reconstruct
from core.gpc.quadrature import build_quadrature


def test_hermite_recurrence():
    z = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(hermite_eval(3, z), z ** 3 - 3.0 * z)
    np.testing.assert_allclose(hermite_eval(4, z), z ** 4 - 6.0 * z ** 2 + 3.0)
    assert hermite_eval(0, 1.7) == 1.0


def test_graded_ordering_and_norms():
    basis = build_basis(2, 2)
    assert [m.exponents for m in basis.indices] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    np.testing.assert_array_equal(basis.norms, [1.0, 1.0, 1.0, 2.0, 1.0, 2.0])
    assert basis.linear_index((1, 1)) == 4
    with pytest.raises(KeyError):
        basis.linear_index((3, 0))


@pytest.mark.parametrize("d,r", [(1, 4), (2, 3), (3, 2)])
def test_basis_size(d, r):
    assert build_basis(d, r).size == comb(r + d, d)


def test_multi_index_rejects_negative_exponent():
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_quadrature_weights_and_moments():
    quad = build_quadrature(2, 5)
    assert quad.size == 25
    assert quad.weights.sum() == pytest.approx(1.0)
    z = quad.nodes
    assert quad.integrate(z[:, 0] ** 2) == pytest.approx(1.0)
    assert quad.integrate(z[:, 1] ** 4) == pytest.approx(3.0)
    assert quad.integrate(z[:, 0] * z[:, 1]) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("degree,Q", [(3, 4), (3, 8), (5, 8)])
def test_basis_is_orthogonal_under_quadrature(degree, Q):
    basis = build_basis(2, degree)
    quad = build_quadrature(2, Q)
    phi = basis.evaluate(quad.nodes)
    gram = phi.T @ (quad.weights[:, None] * phi)
    np.testing.assert_allclose(gram, np.diag(basis.norms), rtol=1e-12, atol=1e-10)


def test_gaussian_projection_reproduces_moments():
    basis = build_basis(2, 3)
    X = project_gaussian_initial([1.0, -2.0], [0.3, 0.1], [5.0, 6.0], basis)
    assert X.n == 4
    m = moments(X, basis)
    np.testing.assert_allclose(m.mean, [1.0, -2.0, 5.0, 6.0])
    np.testing.assert_allclose(m.cov, np.diag([0.09, 0.01, 0.0, 0.0]), atol=1e-15)


def test_reconstruct_is_affine_in_germ():
    basis = build_basis(2, 2)
    X = project_gaussian_initial([1.0, -2.0], [0.3, 0.1], [], basis)
    z = np.array([[0.5, -1.0], [2.0, 0.0]])
    np.testing.assert_allclose(reconstruct(X, basis, z), [[1.15, -2.1], [1.6, -2.0]])


def test_flat_layout_is_row_major():
    X = GpcState(np.arange(6.0).reshape(2, 3))
    np.testing.assert_array_equal(X.flat(), np.arange(6.0))
    np.testing.assert_array_equal(GpcState.from_flat(X.flat(), 2).coeffs, X.coeffs)
