# FILE: core/errors.py
from __future__ import annotations

from typing import Any


class RotorflowError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RotorflowError):
    """Invalid configuration. `field` is a dotted path, `line` a 1-based JSON line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingArtifact(RotorflowError):
    """A run directory lacks a file a command needs."""


class NumericalError(RotorflowError):
    """Base class for failures of the numerical pipeline."""


class SingularEvaluation(NumericalError):
    """A rotlet kernel was evaluated closer than r_min to its singularity."""

    def __init__(self, distance: float, r_min: float, what: str = "", step: int | None = None):
        self.distance = float(distance)
        self.r_min = float(r_min)
        self.what = what
        self.step = step
        msg = f"rotlet evaluated at r={self.distance:.3e} < r_min={self.r_min:.3e}"
        if what:
            msg += f" ({what})"
        if step is not None:
            msg += f" at step {step}"
        super().__init__(msg)

    def at_step(self, step: int) -> "SingularEvaluation":
        return SingularEvaluation(self.distance, self.r_min, self.what, step)


class DimensionMismatch(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    """Regularized Q_uu failed its Cholesky factorization at `step`."""

    def __init__(self, step: int):
        self.step = int(step)
        super().__init__(f"Q_uu not positive definite at step {self.step}")


class NonDiagonalWeight(NumericalError):
    pass


class NegativeEigenvalue(NumericalError):
    pass


class WindowOutOfRange(NumericalError):
    pass


class MaxItersReached(NumericalError):
    """Solver hit max_iters; `result` holds the best trajectory found."""

    def __init__(self, result: Any, iterations: int):
        self.result = result
        self.iterations = int(iterations)
        super().__init__(f"no convergence after {self.iterations} iterations")
