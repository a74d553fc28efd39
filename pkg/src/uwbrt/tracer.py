"""Path enumeration: line of sight, specular chains and single edge diffraction.

Specular paths are discovered by shooting rays over a geodesic lattice and
registering a candidate reflection sequence whenever a ray passes within
the capture radius of the receiver.  Every candidate is then solved
exactly with the image method and kept only if all reflection points lie
on their faces and every leg is unobstructed, so returned geometry does
not depend on the launch density.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .geom import Vec3, vec
from .materials import Material
from .scene import Scene

CAPTURE_ALPHA = 1.5
MAX_REFLECTIONS_SUPPORTED = 7


class Kind(str, enum.Enum):
    LAUNCH = "Launch"
    REFLECTION = "Reflection"
    DIFFRACTION = "Diffraction"
    ARRIVAL = "Arrival"


@dataclass(frozen=True)
class Interaction:
    kind: Kind
    point: Vec3
    element_id: int = -1          # surface id or edge id
    normal: Optional[Vec3] = None  # surface normal, or edge direction for diffraction
    material: Optional[Material] = None
    face_normals: Optional[tuple[Vec3, Vec3]] = None


@dataclass(frozen=True)
class PropagationPath:
    interactions: tuple[Interaction, ...]
    total_length: float
    signature: tuple[tuple[str, int], ...]

    @property
    def points(self) -> np.ndarray:
        return np.array([i.point for i in self.interactions])

    @property
    def is_los(self) -> bool:
        return len(self.interactions) == 2

    @property
    def n_reflections(self) -> int:
        return sum(i.kind is Kind.REFLECTION for i in self.interactions)

    @property
    def diffraction(self) -> Optional[Interaction]:
        for i in self.interactions:
            if i.kind is Kind.DIFFRACTION:
                return i
        return None

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def sort_key(self):
        return (self.signature, self.total_length)


@dataclass(frozen=True)
class TraceBudget:
    max_reflections: int = 6
    enable_diffraction: bool = True
    launch_rays: int = 100_000
    max_path_length: float = 120.0
    bidirectional: bool = True

    def __post_init__(self):
        if not 0 <= self.max_reflections <= MAX_REFLECTIONS_SUPPORTED:
            raise ValueError(f"max_reflections must lie in [0, {MAX_REFLECTIONS_SUPPORTED}]")
        if self.launch_rays < 12:
            raise ValueError("launch_rays must be >= 12")


# -- launch lattice -----------------------------------------------------------

def _icosahedron():
    p = (1.0 + 5 ** 0.5) / 2.0
    v = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                  [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                  [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], dtype=float)
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    return v, faces


@lru_cache(maxsize=8)
def geodesic_directions(frequency: int) -> np.ndarray:
    """Unit vectors of a class-I geodesic sphere: ``10 f^2 + 2`` points.

    Each icosahedron face is subdivided ``frequency`` times; points shared
    by faces (vertices, edge points) are emitted exactly once, in a fixed
    order.
    """
    f = int(frequency)
    if f < 1:
        raise ValueError("frequency must be >= 1")
    v, faces = _icosahedron()
    pts = [v]
    edges = sorted({tuple(sorted(e)) for a, b, c in faces for e in ((a, b), (b, c), (c, a))})
    k = np.arange(1, f)[:, None] / f
    for a, b in edges:
        pts.append(v[a] + k * (v[b] - v[a]))
    for a, b, c in faces:
        i, j = np.meshgrid(np.arange(1, f), np.arange(1, f), indexing="ij")
        m = (i + j) < f
        i, j = i[m], j[m]
        w = f - i - j
        pts.append((i[:, None] * v[a] + j[:, None] * v[b] + w[:, None] * v[c]) / f)
    out = np.concatenate(pts)
    out /= np.linalg.norm(out, axis=1)[:, None]
    return np.ascontiguousarray(out)


def launch_lattice(n_rays: int) -> tuple[np.ndarray, float]:
    """Geodesic directions closest to ``n_rays`` and their mean angular spacing."""
    f = max(1, int(round(np.sqrt(max(n_rays - 2, 10) / 10.0))))
    dirs = geodesic_directions(f)
    spacing = float(np.sqrt(8.0 * np.pi / (np.sqrt(3.0) * len(dirs))))
    return dirs, spacing


# -- signatures -----------------------------------------------------------------

def code_base(scene: Scene, max_reflections: int) -> int:
    base = scene.floor_id + 2
    if max_reflections and base ** max_reflections >= 2 ** 62:
        raise ValueError("too many surfaces to encode reflection sequences in 64 bits")
    return base


def decode(code: int, base: int) -> tuple[int, ...]:
    out = []
    code = int(code)
    while code:
        code, digit = divmod(code, base)
        out.append(digit - 1)
    return tuple(out)


def sids_matrix(seqs: Sequence[Sequence[int]], width: Optional[int] = None) -> np.ndarray:
    width = max([len(s) for s in seqs] + [width or 0, 1])
    out = np.full((len(seqs), width), -1, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = s
    return out


# -- path construction ------------------------------------------------------------

def _build_specular(scene: Scene, tx, rx, seq, pts) -> PropagationPath:
    inter = [Interaction(Kind.LAUNCH, vec(tx))]
    for sid, p in zip(seq, pts):
        inter.append(Interaction(Kind.REFLECTION, np.array(p, dtype=float), int(sid),
                                 scene.surface_normal(int(sid)), scene.material_of(int(sid))))
    inter.append(Interaction(Kind.ARRIVAL, vec(rx)))
    chain = np.array([i.point for i in inter])
    length = float(np.linalg.norm(np.diff(chain, axis=0), axis=1).sum())
    return PropagationPath(tuple(inter), length, tuple(("R", int(s)) for s in seq))


def _build_diffraction(scene: Scene, tx, rx, edge_id, q) -> PropagationPath:
    edge = scene.edge(int(edge_id))
    inter = (Interaction(Kind.LAUNCH, vec(tx)),
             Interaction(Kind.DIFFRACTION, np.array(q, dtype=float), int(edge_id), edge.direction,
                         scene.boxes[int(edge_id) // 12][1], (edge.normal_a, edge.normal_b)),
             Interaction(Kind.ARRIVAL, vec(rx)))
    length = float(np.linalg.norm(q - vec(tx)) + np.linalg.norm(vec(rx) - q))
    return PropagationPath(inter, length, (("D", int(edge_id)),))


def find_los(scene: Scene, tx, rx) -> Optional[PropagationPath]:
    tx, rx = vec(tx), vec(rx)
    if np.linalg.norm(rx - tx) <= 1e-9:
        raise ValueError("tx and rx coincide")
    a = scene.arrays
    clear = kernels.segments_clear(tx[None, :], rx[None, :], a.boxes, a.has_floor)
    if not clear[0]:
        return None
    return _build_specular(scene, tx, rx, (), ())


def refine_specular_path(scene: Scene, tx, rx, signature) -> Optional[PropagationPath]:
    """Exact image-method path for a reflection sequence, or None if infeasible.

    ``signature`` lists surface ids in order (``("R", id)`` pairs are accepted too).
    """
    seq = tuple(int(s[1]) if isinstance(s, tuple) else int(s) for s in signature)
    if not seq:
        return find_los(scene, tx, rx)
    if len(seq) > MAX_REFLECTIONS_SUPPORTED:
        raise ValueError("too many reflections")
    if any(s < 0 or s > scene.floor_id or (s == scene.floor_id and scene.floor is None) for s in seq):
        return None
    tx, rx = vec(tx), vec(rx)
    a = scene.arrays
    ok, pts = kernels.refine(tx, rx[None, :], sids_matrix([seq]), a.boxes, a.has_floor)
    if not ok[0]:
        return None
    return _build_specular(scene, tx, rx, seq, pts[0, :len(seq)])


def _single_point_grid(p):
    return np.array([p[0] - 0.5, p[1] - 0.5, 1.0, 1.0, p[2]])


def discover_signatures(scene: Scene, source, target, budget: TraceBudget) -> set[tuple[int, ...]]:
    """Reflection sequences of rays from ``source`` captured at ``target``."""
    if budget.max_reflections == 0:
        return set()
    dirs, spacing = launch_lattice(budget.launch_rays)
    a = scene.arrays
    base = code_base(scene, budget.max_reflections)
    _, codes = kernels.trace_capture(vec(source), dirs, a.boxes, a.has_floor, budget.max_reflections,
                                     _single_point_grid(vec(target)), 1, 1,
                                     CAPTURE_ALPHA * spacing, budget.max_path_length, base)
    return {decode(c, base) for c in np.unique(codes)}


def enumerate_specular_paths(scene: Scene, tx, rx, budget: TraceBudget = TraceBudget()) -> list[PropagationPath]:
    """Refined reflection paths (at least one bounce), canonically sorted.

    With ``budget.bidirectional`` rays are also launched from the receiver
    and the reversed sequences merged in, which makes the discovered set
    symmetric under swapping the terminals.
    """
    tx, rx = vec(tx), vec(rx)
    seqs = discover_signatures(scene, tx, rx, budget)
    if budget.bidirectional:
        seqs |= {tuple(reversed(s)) for s in discover_signatures(scene, rx, tx, budget)}
    if not seqs:
        return []
    seqs = sorted(seqs)
    a = scene.arrays
    ok, pts = kernels.refine(tx, np.repeat(rx[None, :], len(seqs), 0), sids_matrix(seqs),
                             a.boxes, a.has_floor)
    paths = [_build_specular(scene, tx, rx, s, pts[i, :len(s)])
             for i, s in enumerate(seqs) if ok[i]]
    return sorted(paths, key=PropagationPath.sort_key)


def find_diffraction_paths(scene: Scene, tx, rx, budget: TraceBudget = TraceBudget()) -> list[PropagationPath]:
    if not budget.enable_diffraction or not scene.boxes:
        return []
    tx, rx = vec(tx), vec(rx)
    a = scene.arrays
    _, eids, q = kernels.diffract(tx, rx[None, :], a.edges, a.boxes, a.has_floor)
    paths = [_build_diffraction(scene, tx, rx, e, q[i]) for i, e in enumerate(eids)]
    return sorted(paths, key=PropagationPath.sort_key)


def trace_paths(scene: Scene, tx, rx, budget: TraceBudget = TraceBudget()) -> list[PropagationPath]:
    """All paths between two points, canonically sorted (LOS first)."""
    paths = []
    los = find_los(scene, tx, rx)
    if los is not None:
        paths.append(los)
    paths += enumerate_specular_paths(scene, tx, rx, budget)
    paths += find_diffraction_paths(scene, tx, rx, budget)
    return sorted(paths, key=PropagationPath.sort_key)


# -- array form used by grid sweeps -----------------------------------------------

@dataclass
class PathBundle:
    """Paths between one tx/rx pair held as arrays.

    Specular chains (LOS is the zero-bounce chain) store their points
    including both terminals in ``chain_pts[i, :nref[i] + 2]``.
    """

    tx: np.ndarray
    rx: np.ndarray
    chain_pts: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 3)))
    nref: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sids: np.ndarray = field(default_factory=lambda: np.zeros((0, 1), dtype=np.int64))
    edge_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    diff_pts: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def count(self) -> int:
        return len(self.nref) + len(self.edge_ids)

    def chain_lengths(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.chain_pts, axis=1), axis=2)
        k = np.arange(seg.shape[1])[None, :]
        return np.where(k <= self.nref[:, None], seg, 0.0).sum(axis=1)

    @classmethod
    def from_paths(cls, paths: Sequence[PropagationPath], tx=None, rx=None) -> "PathBundle":
        if paths:
            tx = paths[0].interactions[0].point
            rx = paths[0].interactions[-1].point
        spec = [p for p in paths if p.diffraction is None]
        diff = [p for p in paths if p.diffraction is not None]
        kmax = max([p.n_reflections for p in spec] + [0])
        chain = np.zeros((len(spec), kmax + 2, 3))
        nref = np.zeros(len(spec), dtype=np.int64)
        sids = np.full((len(spec), max(kmax, 1)), -1, dtype=np.int64)
        for i, p in enumerate(spec):
            pts = p.points
            m = len(pts) - 2
            chain[i, :m + 2] = pts
            chain[i, m + 2:] = pts[-1]
            nref[i] = m
            sids[i, :m] = [it.element_id for it in p.interactions[1:-1]]
        return cls(vec(tx), vec(rx), chain, nref, sids,
                   np.array([p.diffraction.element_id for p in diff], dtype=np.int64),
                   np.array([p.diffraction.point for p in diff], dtype=float).reshape(-1, 3))
