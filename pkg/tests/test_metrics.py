# FILE: tests/test_metrics.py
from __future__ import annotations

import numpy as np

from core.metrics import sample_moments


def test_matches_numpy_unbiased_covariance(rng):
    pts = rng.normal(size=(257, 2)) @ np.array([[1.0, 0.3], [0.0, 0.5]])
    m = sample_moments(pts)
    assert m.n == 257
    np.testing.assert_allclose(m.mean, pts.mean(axis=0), rtol=1e-13)
    np.testing.assert_allclose(m.cov, np.cov(pts.T, ddof=1), rtol=1e-12)
    np.testing.assert_allclose(m.moment_vector, [m.mean[0], m.mean[1], m.cov[0, 0], m.cov[1, 1]])


def test_degenerate_sizes():
    one = sample_moments(np.array([[1.0, 2.0]]))
    np.testing.assert_array_equal(one.mean, [1.0, 2.0])
    assert np.isnan(one.cov).all()
    empty = sample_moments(np.zeros((0, 2)))
    assert empty.n == 0
    assert np.isnan(empty.mean).all()

