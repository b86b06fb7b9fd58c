# FILE: core/ftle/grid.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FLAG_NEAR_ROTOR = 1
FLAG_LEFT_BOX = 2
FLAG_BOUNDARY = 4


@dataclass(frozen=True)
class FtleGridSpec:
    """Uniform tracer grid; arrays built on it are indexed [iy, ix]."""
    domain: tuple[float, float, float, float]   # x_min, x_max, y_min, y_max
    resolution: tuple[int, int]                 # n_x, n_y
    t0: float
    tau: float

    def __post_init__(self) -> None:
        x0, x1, y0, y1 = (float(v) for v in self.domain)
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"empty domain {self.domain}")
        nx, ny = (int(v) for v in self.resolution)
        if nx < 3 or ny < 3:
            raise ValueError("grid resolution must be at least 3 per axis")
        if self.tau == 0.0:
            raise ValueError("tau must be nonzero")
        object.__setattr__(self, "domain", (x0, x1, y0, y1))
        object.__setattr__(self, "resolution", (nx, ny))

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], self.resolution[0])

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.domain[2], self.domain[3], self.resolution[1])

    @property
    def spacing(self) -> tuple[float, float]:
        nx, ny = self.resolution
        return (self.domain[1] - self.domain[0]) / (nx - 1), (self.domain[3] - self.domain[2]) / (ny - 1)

    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys, indexing="xy")
        return np.stack([X, Y], axis=-1)

    def with_tau(self, tau: float) -> "FtleGridSpec":
        return FtleGridSpec(self.domain, self.resolution, self.t0, tau)

    def bounding_box(self, scale: float) -> tuple[float, float, float, float]:
        cx = 0.5 * (self.domain[0] + self.domain[1])
        cy = 0.5 * (self.domain[2] + self.domain[3])
        hx = 0.5 * scale * (self.domain[1] - self.domain[0])
        hy = 0.5 * scale * (self.domain[3] - self.domain[2])
        return cx - hx, cx + hx, cy - hy, cy + hy
