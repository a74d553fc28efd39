"""Axis-aligned geometry: vectors, rays, boxes and their intersections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

#: Self-intersection guard for ray restarts (m).
EPSILON = 1e-9
_PARALLEL = 1e-12

Vec3 = np.ndarray

# Face index f = 2*axis + side; side 0 is the min face (outward normal -axis).
FACE_NAMES = ("-x", "+x", "-y", "+y", "-z", "+z")


def vec(x, y=None, z=None) -> Vec3:
    """Build a float64 3-vector from three numbers or one sequence."""
    if y is None:
        out = np.asarray(x, dtype=float).reshape(3)
    else:
        out = np.array([x, y, z], dtype=float)
    return out


def normalize(v) -> Vec3:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def face_normal(face: int) -> Vec3:
    axis, side = divmod(face, 2)
    n = np.zeros(3)
    n[axis] = 1.0 if side else -1.0
    return n


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        o = vec(self.origin)
        d = vec(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("ray direction must be unit norm")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> Vec3:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class SurfaceHit:
    surface_id: int
    point: Vec3
    normal: Vec3
    distance: float


@dataclass(frozen=True)
class Edge:
    """A straight 90-degree box edge.

    ``direction`` is ``normal_a x normal_b`` so that angles measured from
    face a (at 0) through the exterior reach face b at 270 degrees.
    """

    edge_id: int
    start: Vec3
    direction: Vec3
    length: float
    normal_a: Vec3
    normal_b: Vec3

    @property
    def end(self) -> Vec3:
        return self.start + self.length * self.direction

    def angle_of(self, v) -> float:
        """Azimuth of ``v`` around the edge, 0 on face a, in [0, 2*pi)."""
        v = np.asarray(v, dtype=float)
        phi = np.arctan2(v @ self.normal_a, -(v @ self.normal_b))
        return float(np.mod(phi, 2.0 * np.pi))

    def as_row(self) -> np.ndarray:
        return np.concatenate([self.start, self.direction, [self.length],
                               self.normal_a, self.normal_b])


@dataclass(frozen=True)
class Box:
    min_corner: Vec3
    max_corner: Vec3
    surface_id_base: int = 0

    def __post_init__(self):
        lo = vec(self.min_corner)
        hi = vec(self.max_corner)
        if not np.all(lo < hi):
            raise ValueError(f"box min corner {lo} must be below max corner {hi} componentwise")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def bounds(self) -> np.ndarray:
        return np.concatenate([self.min_corner, self.max_corner])

    def contains(self, p, strict: bool = True) -> bool:
        p = np.asarray(p, dtype=float)
        if strict:
            return bool(np.all(p > self.min_corner) and np.all(p < self.max_corner))
        return bool(np.all(p >= self.min_corner) and np.all(p <= self.max_corner))

    def face_plane(self, face: int) -> tuple[int, float]:
        axis, side = divmod(face, 2)
        return axis, float(self.max_corner[axis] if side else self.min_corner[axis])

    def edges(self, edge_id_base: int = 0) -> list[Edge]:
        """The 12 edges; ids run ``edge_id_base .. edge_id_base + 11``."""
        out = []
        lo, hi = self.min_corner, self.max_corner
        k = 0
        for axis in range(3):
            a1, a2 = [a for a in range(3) if a != axis]
            for s1 in (0, 1):
                for s2 in (0, 1):
                    na = face_normal(2 * a1 + s1)
                    nb = face_normal(2 * a2 + s2)
                    e = np.cross(na, nb)
                    start = lo.copy()
                    start[a1] = hi[a1] if s1 else lo[a1]
                    start[a2] = hi[a2] if s2 else lo[a2]
                    start[axis] = lo[axis] if e[axis] > 0 else hi[axis]
                    out.append(Edge(edge_id_base + k, start, e,
                                    float(hi[axis] - lo[axis]), na, nb))
                    k += 1
        return out


def _slab(ray: Ray, box: Box):
    o, d = ray.origin, ray.direction
    tnear, tfar, axis = -np.inf, np.inf, -1
    for a in range(3):
        lo, hi = box.min_corner[a], box.max_corner[a]
        if abs(d[a]) < _PARALLEL:
            if o[a] <= lo + EPSILON or o[a] >= hi - EPSILON:
                return None
            continue
        with np.errstate(over="ignore"):
            t0, t1 = sorted(((lo - o[a]) / d[a], (hi - o[a]) / d[a]))
        if t0 > tnear:
            tnear, axis = t0, a
        tfar = min(tfar, t1)
    if tnear >= tfar:
        return None
    return tnear, tfar, axis


def ray_box_intersect(ray: Ray, box: Box) -> Optional[SurfaceHit]:
    """Nearest entry into ``box`` beyond :data:`EPSILON`, or None.

    Rays starting inside the box, or merely grazing a face, edge or
    corner, do not produce a hit.
    """
    slab = _slab(ray, box)
    if slab is None:
        return None
    tnear, _, axis = slab
    if tnear <= EPSILON:
        return None
    side = 0 if ray.direction[axis] > 0 else 1
    point = ray.at(tnear)
    axis_, coord = box.face_plane(2 * axis + side)
    point[axis_] = coord
    return SurfaceHit(box.surface_id_base + 2 * axis + side, point,
                      face_normal(2 * axis + side), float(tnear))


def reflect_direction(incident, normal) -> Vec3:
    incident = np.asarray(incident, dtype=float)
    normal = np.asarray(normal, dtype=float)
    dot = float(incident @ normal)
    if dot >= 0.0:
        raise ValueError("incident direction must point into the surface (incident . normal < 0)")
    return incident - 2.0 * dot * normal


def mirror_point(point, plane_point, plane_normal) -> Vec3:
    point = np.asarray(point, dtype=float)
    plane_normal = np.asarray(plane_normal, dtype=float)
    dist = float((point - np.asarray(plane_point, dtype=float)) @ plane_normal)
    return point - 2.0 * dist * plane_normal


def angle_between(u, v) -> float:
    """Angle between two vectors, robust near 0 and pi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), u @ v))
