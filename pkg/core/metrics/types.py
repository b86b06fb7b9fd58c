# FILE: core/metrics/types.py
from __future__ import annotations
from dataclasses import dataclass

import numpy as np

@dataclass(frozen=True)
class SampleMoments:
    n: int
    mean: np.ndarray  # (2,)
    cov: np.ndarray   # (2, 2); NaN when n < 2

    @property
    def moment_vector(self) -> np.ndarray:
        """[mu_1, mu_2, s_11, s_22] in the layout of the moment cost."""
        return np.array([self.mean[0], self.mean[1], self.cov[0, 0], self.cov[1, 1]], dtype=np.float64)
