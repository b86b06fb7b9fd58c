# FILE: utils/numeric.py
from __future__ import annotations

import math
from typing import Any

from core.errors import ConfigError


def as_float(v: Any, field: str, lo: float | None = None, hi: float | None = None,
             lo_open: bool = False) -> float:
    """Strict float conversion: rejects bools, strings and non-finite values."""
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {type(v).__name__} {v!r}", field=field)
    x = float(v)
    if not math.isfinite(x):
        raise ConfigError(f"value must be finite, got {v!r}", field=field)
    if lo is not None and (x < lo or (lo_open and x == lo)):
        raise ConfigError(f"value {x} must be {'>' if lo_open else '>='} {lo}", field=field)
    if hi is not None and x > hi:
        raise ConfigError(f"value {x} must be <= {hi}", field=field)
    return x


def as_int(v: Any, field: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConfigError(f"expected an integer, got {v!r}", field=field)
    if lo is not None and v < lo:
        raise ConfigError(f"value {v} must be >= {lo}", field=field)
    if hi is not None and v > hi:
        raise ConfigError(f"value {v} must be <= {hi}", field=field)
    return int(v)


def as_floats(v: Any, field: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"expected a list of numbers, got {v!r}", field=field)
    if length is not None and len(v) != length:
        raise ConfigError(f"expected {length} entries, got {len(v)}", field=field)
    return tuple(as_float(x, f"{field}[{i}]") for i, x in enumerate(v))


def as_ints(v: Any, field: str, lo: int | None = None) -> tuple[int, ...]:
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"expected a non-empty list of integers, got {v!r}", field=field)
    return tuple(as_int(x, f"{field}[{i}]", lo=lo) for i, x in enumerate(v))


def as_str(v: Any, field: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}", field=field)
    if choices is not None and v not in choices:
        raise ConfigError(f"'{v}' is not one of {', '.join(choices)}", field=field)
    return v


def is_integral_ratio(a: float, b: float, tol: float = 1e-9) -> bool:
    """True when a/b is an integer within tol."""
    r = a / b
    return abs(r - round(r)) <= tol
