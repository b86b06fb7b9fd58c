# FILE: core/metrics/summary.py
from __future__ import annotations
import numpy as np
from core.metrics.types import SampleMoments

def _pairwise_sum(cols: np.ndarray) -> np.ndarray:
    # np.sum uses pairwise summation along a contiguous last axis
    return np.sum(np.ascontiguousarray(cols), axis=-1)

def sample_moments(points: np.ndarray) -> SampleMoments:
    """Unbiased mean and covariance (divisor N-1) of an (N, 2) point set."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = pts.shape[0]
    if n == 0:
        nan = float("nan")
        return SampleMoments(0, np.full(2, nan), np.full((2, 2), nan))

    cols = pts.T
    mean = _pairwise_sum(cols) / n
    if n < 2:
        return SampleMoments(n, mean, np.full((2, 2), float("nan")))

    dev = cols - mean[:, None]
    cov = np.empty((2, 2), dtype=np.float64)
    for i in range(2):
        for j in range(i, 2):
            cov[i, j] = cov[j, i] = _pairwise_sum(dev[i] * dev[j]) / (n - 1)
    return SampleMoments(n, mean, cov)
