"""Geometry of the spherical world: placement, distances and neighbourhoods.

Locations are polar coordinates inside a ball of radius 1.0. Distances are plain
Euclidean distances between the Cartesian images of two locations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Protocol, Sequence

import numpy as np

WORLD_RADIUS = 1.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class Location:
    r: float
    phi: float
    theta: float

    @classmethod
    def normalized(cls, r: float, phi: float, theta: float) -> 'Location':
        """Build a location, wrapping phi into [0, 2pi) and reflecting theta at the poles."""
        if theta < 0.0:
            theta = -theta
        elif theta > math.pi:
            theta = TWO_PI - theta
        theta = min(max(theta, 0.0), math.pi)
        phi = math.fmod(phi, TWO_PI)
        if phi < 0.0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        return cls(r=min(max(r, 0.0), WORLD_RADIUS), phi=phi, theta=theta)

    def to_cartesian(self) -> tuple[float, float, float]:
        sin_theta = math.sin(self.theta)
        return (
            self.r * sin_theta * math.cos(self.phi),
            self.r * sin_theta * math.sin(self.phi),
            self.r * math.cos(self.theta),
        )


class Located(Protocol):
    id: int
    loc: Location


def random_location(rng: np.random.Generator) -> Location:
    """Uniform point in the ball: r ~ U^(1/3), theta ~ arccos(1 - 2U), phi ~ U[0, 2pi)."""
    r = WORLD_RADIUS * rng.random() ** (1.0 / 3.0)
    theta = math.acos(1.0 - 2.0 * rng.random())
    phi = TWO_PI * rng.random()
    return Location.normalized(r, phi, theta)


def distance(a: Location, b: Location) -> float:
    return math.dist(a.to_cartesian(), b.to_cartesian())


def apply_angular_jitter(loc: Location, delta_phi_max: float, rng: np.random.Generator) -> Location:
    if delta_phi_max <= 0.0:
        return loc
    d_phi = rng.uniform(-delta_phi_max, delta_phi_max)
    d_theta = rng.uniform(-delta_phi_max, delta_phi_max)
    return Location.normalized(loc.r, loc.phi + d_phi, loc.theta + d_theta)


def nearby_agents(center: Located, candidates: Iterable[Located], radius_of_operation: float) -> List[Located]:
    return [
        candidate
        for candidate in candidates
        if candidate is not center
        and candidate.id != center.id
        and distance(center.loc, candidate.loc) <= radius_of_operation
    ]


# ----- vectorised helpers used by the round loop -----
def cartesian_array(locations: Sequence[Location]) -> np.ndarray:
    if not locations:
        return np.empty((0, 3))
    return np.array([loc.to_cartesian() for loc in locations], dtype=float)


def pairwise_distances(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Distance matrix of shape (len(left), len(right))."""
    diff = left[:, np.newaxis, :] - right[np.newaxis, :, :]
    return np.sqrt(np.einsum('ijk,ijk->ij', diff, diff))


def neighbour_indices(distances: np.ndarray, radii: Sequence[float]) -> List[np.ndarray]:
    """Per row, indices of columns within that row's radius (row i uses radii[i])."""
    limits = np.asarray(radii, dtype=float)[:, np.newaxis]
    mask = distances <= limits
    return [np.flatnonzero(row) for row in mask]
