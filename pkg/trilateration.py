#!/usr/bin/env python3
"""3-D position from ground-station spheres by linearized least squares.

Subtracting the reference sphere (the last constraint) from every other one
turns the sphere equations into A w = b, solved in closed form as
w = (A^T A)^-1 A^T b. When all stations share a height the z column of A is
zero; x and y are then solved on the reduced system and z recovered from the
reference sphere.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

import config
from errors import (DistanceOutOfRange, DuplicateStation, ImaginaryHeight,
                    SingularSystem, TooFewStations)
from geometry import Position3D, euclidean_distance

log = logging.getLogger(__name__)

FULL_3D = 'full-3D'
COPLANAR = 'coplanar-reduced'


@dataclass(frozen=True)
class SphereConstraint:
    station: Position3D
    radius_m: float
    station_id: str = ''

    def __post_init__(self):
        # zero is allowed: UAV sitting on the station
        if not (math.isfinite(self.radius_m) and self.radius_m >= 0):
            raise ValueError(f"radius must be finite and >= 0, got {self.radius_m}")


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.A.ndim != 2 or self.A.shape[1] != 3 or self.A.shape[0] != self.b.shape[0]:
            raise ValueError(f"bad system shapes A{self.A.shape} b{self.b.shape}")
        if not (np.isfinite(self.A).all() and np.isfinite(self.b).all()):
            raise ValueError("system has non-finite entries")


@dataclass(frozen=True)
class LocateOutcome:
    position: Position3D
    residual_norm_m: float
    path: str
    stations_used: Tuple[str, ...]
    ambiguous_height: bool = False


def build_linear_system(constraints: Sequence[SphereConstraint]) -> LinearSystem:
    if len(constraints) < config.MIN_STATIONS:
        raise TooFewStations(
            f"need at least {config.MIN_STATIONS} ground stations, got {len(constraints)}")
    centers = np.array([c.station.as_array() for c in constraints])
    radii = np.array([c.radius_m for c in constraints], dtype=float)
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if np.array_equal(centers[i], centers[j]):
                raise DuplicateStation(
                    f"stations {constraints[i].station_id or i} and "
                    f"{constraints[j].station_id or j} share a position")

    ref, r_ref = centers[-1], radii[-1]
    others, r_others = centers[:-1], radii[:-1]
    A = 2.0 * (ref - others)
    with np.errstate(over='ignore', invalid='ignore'):
        b = (r_others ** 2 - r_ref ** 2
             - (others ** 2).sum(axis=1)
             + (ref ** 2).sum())
    if not np.isfinite(b).all():
        raise DistanceOutOfRange("squared radii exceed the float range")
    return LinearSystem(A=A, b=b)


def _normal_solve(A, b):
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise SingularSystem(f"coefficient matrix rank below {A.shape[1]}")
    return np.linalg.solve(A.T @ A, A.T @ b)


def solve_full(system: LinearSystem) -> Position3D:
    return Position3D.from_array(_normal_solve(system.A, system.b))


def _height_radicand(x, y, reference: SphereConstraint):
    ref = reference.station
    return reference.radius_m ** 2 - (x - ref.x) ** 2 - (y - ref.y) ** 2


def solve_coplanar(system: LinearSystem, reference: SphereConstraint) -> Position3D:
    """x, y from the z-less system; z as the above-plane root of the reference sphere."""
    x, y = _normal_solve(system.A[:, :2], system.b)
    radicand = _height_radicand(x, y, reference)
    tolerance = _radicand_tolerance(reference)
    if radicand < -tolerance:
        raise ImaginaryHeight(radicand)
    z = reference.station.z + math.sqrt(max(radicand, 0.0))
    return Position3D(float(x), float(y), z)


def _radicand_tolerance(reference: SphereConstraint):
    return 1e-9 * max(reference.radius_m ** 2, 1.0)


def _geometry_scale(constraints):
    centers = np.array([c.station.as_array() for c in constraints])
    return max(float(np.ptp(centers, axis=0).max()), 1.0)


def is_coplanar(constraints: Sequence[SphereConstraint],
                rel_tolerance=config.COPLANAR_REL_TOLERANCE) -> bool:
    heights = np.array([c.station.z for c in constraints])
    return float(np.ptp(heights)) <= rel_tolerance * _geometry_scale(constraints)


def residual_norm(position: Position3D, constraints: Sequence[SphereConstraint]) -> float:
    """RMS of the radius mismatch over all stations."""
    mismatch = [euclidean_distance(position, c.station) - c.radius_m for c in constraints]
    return float(np.sqrt(np.mean(np.square(mismatch))))


def locate(constraints: Sequence[SphereConstraint]) -> LocateOutcome:
    constraints = list(constraints)
    system = build_linear_system(constraints)
    reference = constraints[-1]
    ambiguous = False

    if is_coplanar(constraints):
        path = COPLANAR
    else:
        path = FULL_3D
    if path == FULL_3D:
        try:
            position = solve_full(system)
        except SingularSystem:
            z_column = np.abs(system.A[:, 2]).max()
            if z_column > config.COPLANAR_REL_TOLERANCE * _geometry_scale(constraints):
                raise
            path = COPLANAR
    if path == COPLANAR:
        position = solve_coplanar(system, reference)
        radicand = _height_radicand(position.x, position.y, reference)
        ambiguous = abs(radicand) <= 1e-6 * max(reference.radius_m ** 2, 1.0)
        if ambiguous:
            log.debug("height radicand %.3g near zero; fix sits close to the station plane", radicand)

    outcome = LocateOutcome(position=position,
                            residual_norm_m=residual_norm(position, constraints),
                            path=path,
                            stations_used=tuple(c.station_id for c in constraints),
                            ambiguous_height=ambiguous)
    log.debug("located (%.2f, %.2f, %.2f) via %s, residual %.3f m",
              position.x, position.y, position.z, path, outcome.residual_norm_m)
    return outcome


def forward_constraints(truth: Position3D, stations: Sequence[Tuple[str, Position3D]]
                        ) -> List[SphereConstraint]:
    """Exact radii from a known UAV position."""
    return [SphereConstraint(station=pos, radius_m=euclidean_distance(truth, pos), station_id=sid)
            for sid, pos in stations]
