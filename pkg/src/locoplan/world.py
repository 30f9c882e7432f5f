"""Planar environment: contact surfaces, obstacles, signed distances.

Surfaces are line segments robots may place contacts on; obstacles are
analytic primitives (discs and axis-aligned boxes) with exact signed
distance functions so collision gradients need no numerical smoothing.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NotFound

NO_OBSTACLE_DISTANCE = 1e9


@dataclass(frozen=True)
class ContactSurface:
    id: str
    p0: tuple[float, float]
    p1: tuple[float, float]
    normal: tuple[float, float]
    mu: float

    def __post_init__(self):
        d = np.subtract(self.p1, self.p0)
        if not np.linalg.norm(d) > 0:
            raise InvalidArgument(f"surface {self.id}: p0 equals p1")
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise InvalidArgument(f"surface {self.id}: normal must be unit length")
        if abs(float(np.dot(n, d))) > 1e-9 * float(np.linalg.norm(d)):
            raise InvalidArgument(f"surface {self.id}: normal not perpendicular")
        if self.mu < 0:
            raise InvalidArgument(f"surface {self.id}: mu must be >= 0")

    def point_at(self, t: float) -> np.ndarray:
        return np.asarray(self.p0) + t * (np.asarray(self.p1) - np.asarray(self.p0))


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float]
    hi: tuple[float, float]


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: Disc | Box
    created_at: float = 0.0

    def __post_init__(self):
        s = self.shape
        if isinstance(s, Disc):
            if not s.radius > 0:
                raise InvalidArgument(f"obstacle {self.id}: radius must be > 0")
        else:
            if not (s.lo[0] < s.hi[0] and s.lo[1] < s.hi[1]):
                raise InvalidArgument(f"obstacle {self.id}: box min must be < max")


def _sd_disc(shape: Disc, p: np.ndarray) -> float:
    return float(np.hypot(p[0] - shape.center[0], p[1] - shape.center[1])) - shape.radius


def _sd_box(shape: Box, p: np.ndarray) -> float:
    half = (np.asarray(shape.hi) - np.asarray(shape.lo)) / 2.0
    mid = (np.asarray(shape.hi) + np.asarray(shape.lo)) / 2.0
    d = np.abs(p - mid) - half
    outside = float(np.linalg.norm(np.maximum(d, 0.0)))
    inside = float(min(max(d[0], d[1]), 0.0))
    return outside + inside


def obstacle_distance(obst: Obstacle, p: np.ndarray) -> float:
    if isinstance(obst.shape, Disc):
        return _sd_disc(obst.shape, p)
    return _sd_box(obst.shape, p)


def obstacle_distance_gradient(obst: Obstacle, p: np.ndarray) -> np.ndarray:
    """d(signed distance)/dp; unit vector away from the obstacle.

    At gradient singularities (disc center, box midlines) a fixed
    subgradient is returned so downstream optimization stays deterministic.
    """
    s = obst.shape
    if isinstance(s, Disc):
        d = p - np.asarray(s.center)
        r = float(np.linalg.norm(d))
        if r < 1e-12:
            return np.array([1.0, 0.0])
        return d / r
    half = (np.asarray(s.hi) - np.asarray(s.lo)) / 2.0
    mid = (np.asarray(s.hi) + np.asarray(s.lo)) / 2.0
    rel = p - mid
    d = np.abs(rel) - half
    sgn = np.where(rel >= 0, 1.0, -1.0)
    if d[0] > 0 or d[1] > 0:
        outer = np.maximum(d, 0.0)
        nrm = float(np.linalg.norm(outer))
        return sgn * outer / nrm
    # inside: distance changes along the axis closest to a face
    if d[0] >= d[1]:
        return np.array([sgn[0], 0.0])
    return np.array([0.0, sgn[1]])


class WorldState:
    """Mutable environment with a revision counter.

    Every mutation bumps `revision`. Readers that must see a consistent
    world across many queries take `snapshot()` and work on the copy.
    """

    def __init__(
        self,
        surfaces: list[ContactSurface] | None = None,
        obstacles: list[Obstacle] | None = None,
    ):
        self.surfaces: dict[str, ContactSurface] = {}
        self.obstacles: dict[str, Obstacle] = {}
        self.revision = 0
        for s in surfaces or []:
            if s.id in self.surfaces:
                raise InvalidArgument(f"duplicate surface id {s.id!r}")
            self.surfaces[s.id] = s
        for o in obstacles or []:
            if o.id in self.obstacles:
                raise InvalidArgument(f"duplicate obstacle id {o.id!r}")
            self.obstacles[o.id] = o

    def snapshot(self) -> "WorldState":
        return copy.deepcopy(self)

    def add_obstacle(self, obst: Obstacle) -> int:
        if obst.id in self.obstacles:
            raise InvalidArgument(f"duplicate obstacle id {obst.id!r}")
        self.obstacles[obst.id] = obst
        self.revision += 1
        return self.revision

    def move_obstacle(self, obstacle_id: str, shape: Disc | Box) -> int:
        if obstacle_id not in self.obstacles:
            raise NotFound(f"unknown obstacle {obstacle_id!r}")
        old = self.obstacles[obstacle_id]
        self.obstacles[obstacle_id] = Obstacle(obstacle_id, shape, old.created_at)
        self.revision += 1
        return self.revision

    def remove_obstacle(self, obstacle_id: str) -> int:
        if obstacle_id not in self.obstacles:
            raise NotFound(f"unknown obstacle {obstacle_id!r}")
        del self.obstacles[obstacle_id]
        self.revision += 1
        return self.revision

    def surface(self, surface_id: str) -> ContactSurface:
        try:
            return self.surfaces[surface_id]
        except KeyError:
            raise NotFound(f"unknown surface {surface_id!r}") from None


def signed_distance(world: WorldState, point) -> tuple[float, str | None]:
    """Minimum signed distance over all obstacles (negative inside).

    Returns a large sentinel and no id when the world has no obstacles.
    """
    p = np.asarray(point, dtype=float)
    best = NO_OBSTACLE_DISTANCE
    best_id = None
    for obst in world.obstacles.values():
        d = obstacle_distance(obst, p)
        if d < best:
            best = d
            best_id = obst.id
    return best, best_id


def signed_distance_gradient(world: WorldState, point) -> tuple[float, np.ndarray]:
    """Signed distance and its gradient w.r.t. the query point."""
    p = np.asarray(point, dtype=float)
    d, oid = signed_distance(world, p)
    if oid is None:
        return d, np.zeros(2)
    return d, obstacle_distance_gradient(world.obstacles[oid], p)


def sample_contact_point(
    world: WorldState, surface_id: str, rng: np.random.Generator, t: float | None = None
) -> tuple[np.ndarray, np.ndarray, float]:
    """Uniform point on a surface segment: (position, normal, mu).

    A fixed parameter t overrides the draw (tests force endpoints and
    midpoints this way); the rng is still consumed identically so seeded
    planning runs stay reproducible whether or not t is forced.
    """
    surf = world.surface(surface_id)
    drawn = rng.uniform(0.0, 1.0)
    if t is None:
        t = drawn
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument("surface parameter t must be in [0, 1]")
    return surf.point_at(t), np.asarray(surf.normal, dtype=float), surf.mu


def ingest_point_cloud(points, cell: float) -> list[Obstacle]:
    """Quantize a 2D point cloud into one axis-aligned box per occupied cell."""
    if not cell > 0:
        raise InvalidArgument("cell size must be > 0")
    occupied = set()
    for p in points:
        i = math.floor(float(p[0]) / cell)
        j = math.floor(float(p[1]) / cell)
        occupied.add((i, j))
    boxes = []
    for i, j in sorted(occupied):
        lo = (i * cell, j * cell)
        hi = ((i + 1) * cell, (j + 1) * cell)
        boxes.append(Obstacle(f"cell_{i}_{j}", Box(lo, hi)))
    return boxes
