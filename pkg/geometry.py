#!/usr/bin/env python3
"""Slant-distance geometry in a local east-north-up frame (metres)."""
import math
from dataclasses import dataclass

import numpy as np

from errors import AngleOutOfRange, NegativeInput, ZeroReference


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite coordinate in {self}")

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values):
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def translated(self, dx, dy, dz):
        return Position3D(self.x + dx, self.y + dy, self.z + dz)


@dataclass(frozen=True)
class SlantGeometry:
    """Ground distance, UAV height and the two measured angles of one fix."""
    gd_m: float
    h_m: float
    alpha_deg: float
    beta_deg: float

    def __post_init__(self):
        if self.gd_m < 0 or self.h_m < 0:
            raise NegativeInput("ground distance and height must be >= 0")
        if not 0 <= self.alpha_deg <= 90:
            raise AngleOutOfRange(f"alpha {self.alpha_deg} outside [0, 90]")
        if not math.isclose(self.alpha_deg + self.beta_deg, 90.0, abs_tol=1e-9):
            raise AngleOutOfRange("alpha and beta must sum to 90 degrees")

    @classmethod
    def from_alpha(cls, gd_m, h_m, alpha_deg):
        return cls(gd_m, h_m, alpha_deg, beta_from_alpha(alpha_deg))

    @property
    def slant_distance_m(self):
        return slant_distance(self.gd_m, self.h_m, self.beta_deg)


def beta_from_alpha(alpha_deg: float) -> float:
    if not 0 <= alpha_deg <= 90:
        raise AngleOutOfRange(f"alpha {alpha_deg} outside [0, 90]")
    return 90.0 - alpha_deg


def slant_distance(gd_m: float, h_m: float, beta_deg: float) -> float:
    """Law of cosines between ground distance and height, angle beta between them."""
    if gd_m < 0 or h_m < 0:
        raise NegativeInput(f"ground distance {gd_m} and height {h_m} must be >= 0")
    if not 0 < beta_deg <= 180:
        raise AngleOutOfRange(f"beta {beta_deg} outside (0, 180]")
    beta = math.radians(beta_deg)
    squared = gd_m ** 2 + h_m ** 2 - 2.0 * gd_m * h_m * math.cos(beta)
    return math.sqrt(max(squared, 0.0))


def euclidean_distance(a: Position3D, b: Position3D) -> float:
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


def distance_error_pct(estimated_m: float, real_m: float) -> float:
    if real_m <= 0:
        raise ZeroReference(f"reference distance must be > 0, got {real_m}")
    return 100.0 * abs(estimated_m - real_m) / real_m
