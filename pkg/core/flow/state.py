# FILE: core/flow/state.py
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from core.errors import DimensionMismatch
from core.geometry.vec2 import Vec2


class ControlMode(str, Enum):
    VELOCITY = "velocity"
    TORQUE = "torque"

    def control_dim(self, n_r: int) -> int:
        return 3 * int(n_r) if self is ControlMode.VELOCITY else int(n_r)

    @staticmethod
    def parse(v: "ControlMode | str") -> "ControlMode":
        if isinstance(v, ControlMode):
            return v
        s = str(v).strip().lower()
        aliases = {"velocity": "velocity", "velocitycontrol": "velocity",
                   "torque": "torque", "torqueonly": "torque", "torque_only": "torque"}
        if s not in aliases:
            raise ValueError(f"unknown control mode '{v}'")
        return ControlMode(aliases[s])


def state_dim(n_r: int) -> int:
    return 2 * (int(n_r) + 1)


def rotors_from_state_dim(n: int) -> int:
    if n < 4 or n % 2:
        raise DimensionMismatch(f"state dimension {n} is not 2(n_r+1) with n_r >= 1")
    return n // 2 - 1


@dataclass(frozen=True)
class RotorConfig:
    positions: tuple[Vec2, ...]
    strengths: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.positions) < 1:
            raise DimensionMismatch("need at least one rotor")
        if len(self.positions) != len(self.strengths):
            raise DimensionMismatch(
                f"{len(self.positions)} rotor positions but {len(self.strengths)} strengths")

    @property
    def n_r(self) -> int:
        return len(self.positions)

    def position_array(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.positions], dtype=np.float64)

    def strength_array(self) -> np.ndarray:
        return np.asarray(self.strengths, dtype=np.float64)

    @staticmethod
    def of(positions: Sequence, strengths: Sequence[float]) -> "RotorConfig":
        return RotorConfig(tuple(Vec2.of(p) for p in positions), tuple(float(s) for s in strengths))


@dataclass(frozen=True)
class SystemState:
    """Particle plus rotor positions. Flat layout: [x_p, y_p, x_r1..x_rn, y_r1..y_rn]."""
    particle: Vec2
    rotor_x: tuple[float, ...]
    rotor_y: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.rotor_x) != len(self.rotor_y):
            raise DimensionMismatch("rotor_x and rotor_y lengths differ")
        if len(self.rotor_x) < 1:
            raise DimensionMismatch("need at least one rotor")

    @property
    def n_r(self) -> int:
        return len(self.rotor_x)

    def to_array(self) -> np.ndarray:
        return np.concatenate([
            [self.particle.x, self.particle.y],
            np.asarray(self.rotor_x, dtype=np.float64),
            np.asarray(self.rotor_y, dtype=np.float64),
        ]).astype(np.float64)

    def rotor_positions(self) -> np.ndarray:
        return np.stack([np.asarray(self.rotor_x), np.asarray(self.rotor_y)], axis=-1).astype(np.float64)

    @staticmethod
    def from_array(a: np.ndarray) -> "SystemState":
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        n_r = rotors_from_state_dim(a.size)
        return SystemState(
            particle=Vec2(float(a[0]), float(a[1])),
            rotor_x=tuple(float(v) for v in a[2:2 + n_r]),
            rotor_y=tuple(float(v) for v in a[2 + n_r:]),
        )

    @staticmethod
    def of(particle, rotor_positions: Sequence) -> "SystemState":
        rp = [Vec2.of(p) for p in rotor_positions]
        return SystemState(Vec2.of(particle), tuple(p.x for p in rp), tuple(p.y for p in rp))


@dataclass(frozen=True)
class ControlVector:
    """VELOCITY: [g_1..g_n, vx_1..vx_n, vy_1..vy_n]; TORQUE: [g_1..g_n]."""
    mode: ControlMode
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise DimensionMismatch("empty control vector")
        if self.mode is ControlMode.VELOCITY and len(self.values) % 3:
            raise DimensionMismatch(f"velocity control needs 3*n_r entries, got {len(self.values)}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("control entries must be finite")

    @property
    def n_r(self) -> int:
        return len(self.values) // 3 if self.mode is ControlMode.VELOCITY else len(self.values)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def strengths(self) -> np.ndarray:
        return self.to_array()[: self.n_r]

    @staticmethod
    def velocity(strengths: Sequence[float], vx: Sequence[float], vy: Sequence[float]) -> "ControlVector":
        return ControlVector(ControlMode.VELOCITY, tuple(float(v) for v in (*strengths, *vx, *vy)))

    @staticmethod
    def torque(strengths: Sequence[float]) -> "ControlVector":
        return ControlVector(ControlMode.TORQUE, tuple(float(v) for v in strengths))

    @staticmethod
    def from_array(mode: ControlMode | str, a: np.ndarray) -> "ControlVector":
        return ControlVector(ControlMode.parse(mode), tuple(float(v) for v in np.asarray(a).reshape(-1)))
