"""Warehouse scene: solid rack boxes over a concrete floor, no walls."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geom import Box, Edge
from .materials import CONCRETE, PEC, Material


@dataclass(frozen=True)
class Floor:
    material: Material = CONCRETE
    thickness: float = 0.30


@dataclass(frozen=True)
class SceneArrays:
    """Flat views consumed by :mod:`uwbrt.kernels`."""

    boxes: np.ndarray        # (nb, 6)
    has_floor: int
    kind: np.ndarray         # (6*nb + 1,) int8, 0 = PEC
    eps_r: np.ndarray
    sigma: np.ndarray
    dh: np.ndarray
    edges: np.ndarray        # (12*nb, 13)

    @property
    def n_boxes(self) -> int:
        return len(self.boxes)

    @property
    def floor_id(self) -> int:
        return 6 * len(self.boxes)


@dataclass(frozen=True)
class Scene:
    """Immutable scene.  Box ``i`` owns surface ids ``6i .. 6i+5``;
    the floor plane z = 0 is surface ``6 * len(boxes)``."""

    boxes: tuple[tuple[Box, Material], ...] = ()
    floor: Optional[Floor] = None
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)  # xmin, ymin, xmax, ymax

    def __post_init__(self):
        boxes = tuple((b, m) for b, m in self.boxes)
        for i, (b, _) in enumerate(boxes):
            if b.surface_id_base != 6 * i:
                raise ValueError(f"box {i} has surface_id_base {b.surface_id_base}, expected {6 * i}")
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "bounds", tuple(float(v) for v in self.bounds))

    @classmethod
    def from_boxes(cls, boxes: Sequence, floor: Optional[Floor] = None, bounds=None,
                   material: Material = PEC) -> "Scene":
        """Build a scene from ``Box`` objects, ``(Box, Material)`` pairs or
        ``(min_corner, max_corner)`` pairs; surface ids are re-based."""
        items = []
        for i, item in enumerate(boxes):
            if isinstance(item, Box):
                b, m = item, material
            elif isinstance(item[0], Box):
                b, m = item
            else:
                b, m = Box(item[0], item[1]), material
            items.append((Box(b.min_corner, b.max_corner, 6 * i), m))
        if bounds is None:
            if items:
                lo = np.min([b.min_corner for b, _ in items], axis=0)
                hi = np.max([b.max_corner for b, _ in items], axis=0)
                bounds = (lo[0], lo[1], hi[0], hi[1])
            else:
                bounds = (0.0, 0.0, 0.0, 0.0)
        return cls(tuple(items), floor, bounds)

    @property
    def floor_id(self) -> int:
        return 6 * len(self.boxes)

    @property
    def center(self) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2])

    def material_of(self, surface_id: int) -> Material:
        if surface_id == self.floor_id:
            if self.floor is None:
                raise KeyError("scene has no floor")
            return self.floor.material
        return self.boxes[surface_id // 6][1]

    def surface_normal(self, surface_id: int) -> np.ndarray:
        if surface_id == self.floor_id:
            return np.array([0.0, 0.0, 1.0])
        axis, side = divmod(surface_id % 6, 2)
        n = np.zeros(3)
        n[axis] = 1.0 if side else -1.0
        return n

    def edges(self) -> list[Edge]:
        out = []
        for i, (b, _) in enumerate(self.boxes):
            out.extend(b.edges(12 * i))
        return out

    def edge(self, edge_id: int) -> Edge:
        return self.boxes[edge_id // 12][0].edges(12 * (edge_id // 12))[edge_id % 12]

    def inside_any_box(self, p) -> bool:
        return any(b.contains(p) for b, _ in self.boxes)

    def with_box_roughness(self, dh: float) -> "Scene":
        boxes = tuple((b, m.with_roughness(dh)) for b, m in self.boxes)
        return replace(self, boxes=boxes)

    @cached_property
    def arrays(self) -> SceneArrays:
        nb = len(self.boxes)
        boxes = np.array([b.bounds for b, _ in self.boxes], dtype=float).reshape(nb, 6)
        mats = [m for _, m in self.boxes for _ in range(6)]
        mats.append(self.floor.material if self.floor is not None else PEC)
        kind = np.array([0 if m.is_pec else 1 for m in mats], dtype=np.int8)
        edges = np.array([e.as_row() for e in self.edges()], dtype=float).reshape(-1, 13)
        return SceneArrays(
            boxes=np.ascontiguousarray(boxes),
            has_floor=int(self.floor is not None),
            kind=kind,
            eps_r=np.array([m.eps_r for m in mats], dtype=float),
            sigma=np.array([m.sigma for m in mats], dtype=float),
            dh=np.array([m.roughness_dh for m in mats], dtype=float),
            edges=np.ascontiguousarray(edges),
        )


@dataclass(frozen=True)
class WarehouseParams:
    rack_w: float = 1.3
    rack_d: float = 1.3
    rack_h: float = 2.0
    ground_clearance: float = 0.30
    intra_gap: float = 0.05
    cluster_rows: int = 2
    cluster_cols: int = 7
    corridor_w: float = 1.5
    cluster_grid: tuple[int, int] = (2, 2)   # clusters along (x, y)
    rack_material: Material = PEC
    floor: Material = CONCRETE
    floor_thickness: float = 0.30
    bounds_size: tuple[float, float] = (22.0, 8.0)

    def __post_init__(self):
        object.__setattr__(self, "cluster_grid", tuple(int(v) for v in self.cluster_grid))
        object.__setattr__(self, "bounds_size", tuple(float(v) for v in self.bounds_size))
        lengths = ("rack_w", "rack_d", "rack_h", "ground_clearance", "intra_gap",
                   "corridor_w", "floor_thickness")
        for name in lengths:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.cluster_rows < 1 or self.cluster_cols < 1 or min(self.cluster_grid) < 1:
            raise ValueError("cluster counts must be >= 1")
        if min(self.bounds_size) <= 0:
            raise ValueError("bounds_size must be positive")

    @property
    def cluster_size(self) -> tuple[float, float]:
        """Footprint of one cluster (x, y): long axis along x."""
        return (self.cluster_cols * self.rack_w + (self.cluster_cols - 1) * self.intra_gap,
                self.cluster_rows * self.rack_d + (self.cluster_rows - 1) * self.intra_gap)

    @property
    def field_size(self) -> tuple[float, float]:
        cx, cy = self.cluster_size
        gx, gy = self.cluster_grid
        return gx * cx + (gx - 1) * self.corridor_w, gy * cy + (gy - 1) * self.corridor_w

    @property
    def margins(self) -> tuple[float, float]:
        fx, fy = self.field_size
        bx, by = self.bounds_size
        return max(0.0, (bx - fx) / 2), max(0.0, (by - fy) / 2)

    def cluster_origins(self) -> list[tuple[float, float]]:
        mx, my = self.margins
        cx, cy = self.cluster_size
        gx, gy = self.cluster_grid
        return [(mx + i * (cx + self.corridor_w), my + j * (cy + self.corridor_w))
                for j in range(gy) for i in range(gx)]


def build_warehouse(params: WarehouseParams = WarehouseParams()) -> Scene:
    """Racks as solid boxes raised by ``ground_clearance``; clusters of
    ``cluster_cols x cluster_rows`` racks separated by corridors."""
    z0 = params.ground_clearance
    z1 = z0 + params.rack_h
    boxes = []
    for ox, oy in params.cluster_origins():
        for r in range(params.cluster_rows):
            y = oy + r * (params.rack_d + params.intra_gap)
            for c in range(params.cluster_cols):
                x = ox + c * (params.rack_w + params.intra_gap)
                boxes.append(((x, y, z0), (x + params.rack_w, y + params.rack_d, z1)))
    fx, fy = params.field_size
    mx, my = params.margins
    bounds = (0.0, 0.0, max(params.bounds_size[0], fx + 2 * mx), max(params.bounds_size[1], fy + 2 * my))
    return Scene.from_boxes(boxes, Floor(params.floor, params.floor_thickness), bounds,
                            material=params.rack_material)


def _overlap(a: Box, b: Box) -> bool:
    return bool(np.all(a.min_corner < b.max_corner) and np.all(b.min_corner < a.max_corner))


def validate_scene(scene: Scene) -> list[str]:
    """Human-readable problems; empty when the scene is usable."""
    problems = []
    boxes = [b for b, _ in scene.boxes]
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if _overlap(boxes[i], boxes[j]):
                problems.append(f"boxes {i} and {j} overlap")
    if scene.floor is not None:
        for i, b in enumerate(boxes):
            if b.min_corner[2] < 0.0:
                problems.append(f"box {i} extends below the floor (min z = {b.min_corner[2]:g})")
    for i, (b, m) in enumerate(scene.boxes):
        if not isinstance(m, Material):
            problems.append(f"box {i} has no material")
    return problems


# -- JSON scene configuration ------------------------------------------------

_PARAM_FIELDS = {f.name for f in fields(WarehouseParams)}


def _material_from(obj) -> Material:
    if not isinstance(obj, dict):
        raise ValueError(f"material must be an object, got {obj!r}")
    unknown = set(obj) - {"kind", "eps_r", "sigma", "roughness_dh"}
    if unknown:
        raise ValueError(f"unknown material keys: {sorted(unknown)}")
    return Material(obj.get("kind", "PEC"), float(obj.get("eps_r", 1.0)),
                    float(obj.get("sigma", 0.0)), float(obj.get("roughness_dh", 0.0)))


def params_from_dict(doc: dict) -> WarehouseParams:
    doc = dict(doc)
    preset = doc.pop("preset", None)
    if preset not in (None, "paper-default"):
        raise ValueError(f"unknown scene preset {preset!r}")
    unknown = set(doc) - _PARAM_FIELDS
    if unknown:
        raise ValueError(f"unknown scene keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key in ("rack_material", "floor"):
            kwargs[key] = _material_from(value)
        elif key in ("cluster_grid", "bounds_size"):
            kwargs[key] = tuple(value)
        elif key in ("cluster_rows", "cluster_cols"):
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(value)
    return WarehouseParams(**kwargs)


def params_to_dict(params: WarehouseParams) -> dict:
    out = {}
    for f in fields(WarehouseParams):
        v = getattr(params, f.name)
        if isinstance(v, Material):
            v = v.to_dict()
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def load_scene_params(source: str | Path) -> WarehouseParams:
    """``preset:paper-default`` or a path to a JSON document."""
    if str(source) == "preset:paper-default":
        return WarehouseParams()
    with open(source) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("scene file must hold a JSON object")
    return params_from_dict(doc)
