# FILE: core/geometry/vec2.py
from __future__ import annotations
from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def perp(self) -> "Vec2":
        """k-hat cross this vector: (a, b) -> (-b, a)."""
        return Vec2(-self.y, self.x)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)

    @staticmethod
    def of(p) -> "Vec2":
        if isinstance(p, Vec2):
            return p
        return Vec2(float(p[0]), float(p[1]))
