# FILE: core/gpc/basis.py
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb, factorial, prod
from typing import Iterator

import numpy as np


def hermite_eval(k: int, z):
    """Probabilists' Hermite He_k(z) by the three-term recurrence; z may be an array."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    z = np.asarray(z, dtype=np.float64)
    h_prev = np.ones_like(z)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = z.copy()
    for n in range(1, k):
        h_prev, h = h, z * h - n * h_prev
    return h if h.ndim else float(h)


@dataclass(frozen=True)
class MultiIndex:
    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(int(a) < 0 for a in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def norm(self) -> float:
        """<phi^2> under the standard normal density."""
        return float(prod(factorial(a) for a in self.exponents))


def _compositions(total: int, d: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        yield (total,)
        return
    for a in range(total, -1, -1):
        for rest in _compositions(total - a, d - 1):
            yield (a,) + rest


@dataclass(frozen=True)
class HermiteBasis:
    """
    Total-degree Hermite basis in d standard normal variables.

    Ordering is graded: phi_0 = 1 first, then each degree block with the
    first dimension's exponent decreasing, e.g. d=2:
        (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...
    """
    d: int
    r: int
    indices: tuple[MultiIndex, ...]

    @property
    def size(self) -> int:
        return len(self.indices)

    @cached_property
    def norms(self) -> np.ndarray:
        return np.array([m.norm for m in self.indices], dtype=np.float64)

    @cached_property
    def exponent_table(self) -> np.ndarray:
        return np.array([m.exponents for m in self.indices], dtype=np.intp).reshape(self.size, self.d)

    def linear_index(self, exponents: tuple[int, ...]) -> int:
        key = tuple(int(a) for a in exponents)
        for j, m in enumerate(self.indices):
            if m.exponents == key:
                return j
        raise KeyError(f"multi-index {key} not in basis (d={self.d}, r={self.r})")

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """phi_j(z) for z of shape (..., d); returns (..., K+1)."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.d:
            raise ValueError(f"expected points with {self.d} coordinates, got {z.shape[-1]}")
        he = np.empty(z.shape + (self.r + 1,), dtype=np.float64)
        he[..., 0] = 1.0
        if self.r >= 1:
            he[..., 1] = z
        for n in range(1, self.r):
            he[..., n + 1] = z * he[..., n] - n * he[..., n - 1]

        out = np.ones(z.shape[:-1] + (self.size,), dtype=np.float64)
        exps = self.exponent_table
        for i in range(self.d):
            out *= he[..., i, :][..., exps[:, i]]
        return out


def build_basis(d: int, r: int) -> HermiteBasis:
    if d < 1:
        raise ValueError("stochastic dimension must be >= 1")
    if r < 0:
        raise ValueError("degree must be >= 0")
    indices = tuple(MultiIndex(c) for p in range(r + 1) for c in _compositions(p, d))
    assert len(indices) == comb(r + d, d)
    return HermiteBasis(d=int(d), r=int(r), indices=indices)
