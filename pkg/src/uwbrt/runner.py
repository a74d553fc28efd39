"""Scenario presets, receiver-grid sweeps and coverage map output."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import kernels
from .antenna import POLARIZATIONS, Antenna
from .field import LinkBudget, Waveform, diffraction_gains, specular_gains
from .geom import Vec3
from .scene import Scene, WarehouseParams, build_warehouse
from .tracer import CAPTURE_ALPHA, TraceBudget, code_base, launch_lattice

CHUNK_CELLS = 32  # fixed work unit; results never depend on the worker count
DEFAULT_SCALE = (-110.0, -40.0)


class ConfigurationError(ValueError):
    """Inconsistent scenario, scene or CLI settings."""


@dataclass(frozen=True)
class Scenario:
    name: str
    tx_position: Vec3
    tx_height: float
    tx_polarization: str = "vertical"
    rx_polarization: str = "vertical"
    roughness_dh: float = 0.0
    grid_height: float = 0.2
    grid_spacing: float = 0.25
    description: str = ""

    def __post_init__(self):
        p = np.asarray(self.tx_position, dtype=float).ravel()
        if p.size == 2:
            p = np.append(p, self.tx_height)
        if p.size != 3:
            raise ConfigurationError("tx_position needs 2 or 3 coordinates")
        if abs(p[2] - self.tx_height) > 1e-12:
            raise ConfigurationError(f"tx_position z = {p[2]} disagrees with tx_height = {self.tx_height}")
        object.__setattr__(self, "tx_position", p)
        for pol in (self.tx_polarization, self.rx_polarization):
            if pol not in POLARIZATIONS:
                raise ConfigurationError(f"unknown polarization {pol!r}")
        if not self.grid_spacing > 0:
            raise ConfigurationError("grid_spacing must be positive")
        if self.roughness_dh < 0:
            raise ConfigurationError("roughness_dh must be >= 0")
        if self.tx_height <= 0 or self.grid_height <= 0:
            raise ConfigurationError("antenna heights must be above the floor")

    def with_updates(self, **kwargs) -> "Scenario":
        if "tx_height" in kwargs and "tx_position" not in kwargs:
            kwargs["tx_position"] = (*self.tx_position[:2], kwargs["tx_height"])
        elif "tx_position" in kwargs and "tx_height" not in kwargs:
            kwargs["tx_height"] = float(np.asarray(kwargs["tx_position"], dtype=float)[-1])
        return replace(self, **kwargs)


@dataclass
class CoverageGrid:
    """Receiver grid; row ``iy``, column ``ix`` is the cell centred at
    ``origin + ((ix + 0.5) * spacing, (iy + 0.5) * spacing)``."""

    origin: Vec3
    extent: tuple[float, float]
    spacing: float
    power_dbm: np.ndarray           # (ny, nx), -inf where nothing arrives
    path_count: np.ndarray          # (ny, nx) int
    safe: np.ndarray                # (ny, nx) bool
    excluded: np.ndarray            # (ny, nx) bool
    tx_power_dbm: float = 0.0
    scenario: Optional[Scenario] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.power_dbm.shape

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.shape[1]) + 0.5) * self.spacing

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.shape[0]) + 0.5) * self.spacing

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return np.array([self.xs[ix], self.ys[iy], self.origin[2]])

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = int(np.clip(np.floor((x - self.origin[0]) / self.spacing), 0, self.shape[1] - 1))
        iy = int(np.clip(np.floor((y - self.origin[1]) / self.spacing), 0, self.shape[0] - 1))
        return ix, iy

    @property
    def path_loss_db(self) -> np.ndarray:
        return self.tx_power_dbm - self.power_dbm


def grid_shape(extent, spacing) -> tuple[int, int]:
    """(ny, nx): ceil(extent / spacing) per axis, tolerant to rounding."""
    nx = max(1, math.ceil(extent[0] / spacing - 1e-9))
    ny = max(1, math.ceil(extent[1] / spacing - 1e-9))
    return ny, nx


# -- presets -----------------------------------------------------------------------

def preset_positions(params: WarehouseParams = WarehouseParams()) -> dict[str, np.ndarray]:
    """TX ground positions: warehouse centre, and 2 m in front of the
    leftmost cluster face on the lower-left cluster's centreline."""
    scene_w, scene_d = params.bounds_size
    ox, oy = params.cluster_origins()[0]
    _, cy = params.cluster_size
    return {"center": np.array([scene_w / 2.0, scene_d / 2.0]),
            "before-cluster": np.array([ox - 2.0, oy + cy / 2.0])}


_PRESET_TABLE = [
    # name, position, height, tx pol, rx pol, roughness, description
    ("fig4", "center", 1.5, "vertical", "vertical", 0.0,
     "TX in the middle, standing height, both vertical"),
    ("fig5", "before-cluster", 1.5, "vertical", "vertical", 0.0,
     "TX before the leftmost cluster, both vertical"),
    ("fig6", "center", 1.5, "horizontal-y", "horizontal-y", 0.0,
     "TX in the middle, both horizontal along y"),
    ("fig7", "center", 1.5, "horizontal-y", "vertical", 0.0,
     "TX horizontal along y, RX vertical"),
    ("fig8", "center", 1.5, "vertical", "horizontal-y", 0.0,
     "TX vertical, RX horizontal along y"),
    ("fig9", "center", 0.2, "vertical", "vertical", 0.0,
     "TX lying at 0.2 m, both vertical"),
    ("fig10", "center", 0.2, "horizontal-x", "vertical", 0.0,
     "TX lying at 0.2 m, horizontal along x; RX vertical"),
    ("fig11", "center", 0.2, "horizontal-y", "vertical", 0.0,
     "TX lying at 0.2 m, horizontal along y; RX vertical"),
    ("fig12", "center", 1.5, "vertical", "vertical", 0.05,
     "as fig4 with 5 cm rack roughness"),
    ("fig13", "before-cluster", 1.5, "vertical", "vertical", 0.05,
     "as fig5 with 5 cm rack roughness"),
]


def scenario_presets(params: WarehouseParams = WarehouseParams()) -> list[Scenario]:
    pos = preset_positions(params)
    return [Scenario(name, (*pos[where], h), h, tp, rp, dh, description=desc)
            for name, where, h, tp, rp, dh, desc in _PRESET_TABLE]


def get_preset(name: str, params: WarehouseParams = WarehouseParams()) -> Scenario:
    for s in scenario_presets(params):
        if s.name == name:
            return s
    raise ConfigurationError(f"unknown scenario {name!r}")


# -- sweep -------------------------------------------------------------------------------

@dataclass
class _Context:
    tx: Antenna
    rx_template: Antenna
    boxes: np.ndarray
    has_floor: int
    edges: np.ndarray
    kind: np.ndarray
    eps_r: np.ndarray
    sigma: np.ndarray
    dh: np.ndarray
    freqs: np.ndarray
    weights: np.ndarray
    max_refl: int
    diffraction: bool
    base: int


_CTX: Optional[_Context] = None


def _init_worker(ctx: _Context):
    global _CTX
    _CTX = ctx


def _decode_codes(codes: np.ndarray, base: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised digit expansion: (sids (n, width) padded -1, lengths)."""
    sids = np.full((len(codes), max(width, 1)), -1, dtype=np.int64)
    rest = codes.astype(np.int64).copy()
    nref = np.zeros(len(codes), dtype=np.int64)
    for k in range(width):
        rest, digit = np.divmod(rest, base)
        live = digit > 0
        sids[live, k] = digit[live] - 1
        nref += live
    return sids, nref


def _process_chunk(task) -> tuple[np.ndarray, np.ndarray]:
    """Received power (dBm, relative to 0 dBm) and path count per cell."""
    rx_pts, cell_of_code, codes = task
    c = _CTX
    m = len(rx_pts)
    tx_pos = c.tx.position
    nf = len(c.freqs)
    total = np.zeros((m, nf), dtype=complex)
    count = np.zeros(m, dtype=np.int64)
    nb = len(c.boxes)
    rx = c.rx_template

    # line of sight, then reflection chains in code order
    los = kernels.segments_clear(np.repeat(tx_pos[None, :], m, 0), rx_pts, c.boxes, c.has_floor).astype(bool)
    los_cells = np.flatnonzero(los)
    sids, nref = _decode_codes(codes, c.base, c.max_refl)
    ok, pts = kernels.refine(tx_pos, rx_pts[cell_of_code], sids, c.boxes, c.has_floor)
    good = np.flatnonzero(ok.astype(bool))
    K = sids.shape[1]
    n_chain = len(los_cells) + len(good)
    chain_cells = np.concatenate([los_cells, cell_of_code[good]]).astype(np.int64)
    chain = np.empty((n_chain, K + 2, 3))
    chain[:, 0] = tx_pos
    chain[:, 1:] = rx_pts[chain_cells][:, None, :]
    all_nref = np.concatenate([np.zeros(len(los_cells), dtype=np.int64), nref[good]])
    all_sids = np.concatenate([np.full((len(los_cells), K), -1, dtype=np.int64), sids[good]])
    for j in range(len(los_cells), n_chain):
        r = all_nref[j]
        chain[j, 1:r + 1] = pts[good[j - len(los_cells)], :r]
    if n_chain:
        dy = kernels.reflection_dyadics(np.ascontiguousarray(chain), all_nref, np.ascontiguousarray(all_sids),
                                        nb, c.kind, c.eps_r, c.sigma, c.dh, c.freqs)
        g = specular_gains(chain, all_nref, dy, c.tx, rx, c.freqs)
        np.add.at(total, chain_cells, g)
        np.add.at(count, chain_cells, 1)

    if c.diffraction and nb:
        rows, eids, q = kernels.diffract(tx_pos, rx_pts, c.edges, c.boxes, c.has_floor)
        if len(rows):
            g = diffraction_gains(tx_pos, rx_pts[rows], c.edges[eids], q, c.tx, rx, c.freqs)
            np.add.at(total, rows, g)
            np.add.at(count, rows, 1)

    p = (np.abs(total) ** 2 @ c.weights) / c.weights.sum()
    with np.errstate(divide="ignore"):
        dbm = np.where(p > 0, 10.0 * np.log10(np.where(p > 0, p, 1.0)), -np.inf)
    return dbm, count


def _validate(scene: Scene, scenario: Scenario):
    tx = scenario.tx_position
    if scene.inside_any_box(tx):
        raise ConfigurationError(f"transmitter {tuple(float(v) for v in tx)} lies inside a rack")
    if scene.floor is not None and tx[2] <= 0:
        raise ConfigurationError("transmitter must be above the floor")
    x0, y0, x1, y1 = scene.bounds
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError("scene bounds are empty")


def run_scenario(scene: Scene, scenario: Scenario, budget: TraceBudget = TraceBudget(),
                 waveform: Waveform = Waveform(), link: LinkBudget = LinkBudget(),
                 workers: int = 1, progress: Optional[Callable[[int, int], None]] = None) -> CoverageGrid:
    """Sweep the receiver grid over the scene bounds.

    Rays are launched once from the transmitter and captured at every grid
    receiver; each cell then refines its reflection sequences, adds line of
    sight and single edge diffraction, and sums the paths coherently per
    frequency before band averaging.  Cells are processed in fixed-size
    chunks, so the result is bit-identical for any ``workers``.
    """
    _validate(scene, scenario)
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    if scenario.roughness_dh > 0:
        scene = scene.with_box_roughness(scenario.roughness_dh)
    x0, y0, x1, y1 = scene.bounds
    spacing = scenario.grid_spacing
    ny, nx = grid_shape((x1 - x0, y1 - y0), spacing)
    xs = x0 + (np.arange(nx) + 0.5) * spacing
    ys = y0 + (np.arange(ny) + 0.5) * spacing
    gx, gy = np.meshgrid(xs, ys)
    rx_all = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, scenario.grid_height)], axis=1)

    a = scene.arrays
    if len(a.boxes):
        lo, hi = a.boxes[None, :, :3], a.boxes[None, :, 3:]
        excluded = ((rx_all[:, None, :] > lo) & (rx_all[:, None, :] < hi)).all(axis=2).any(axis=1)
    else:
        excluded = np.zeros(len(rx_all), dtype=bool)

    tx = Antenna.with_polarization(scenario.tx_position, scenario.tx_polarization)
    rx = Antenna.with_polarization(rx_all[0], scenario.rx_polarization)
    base = code_base(scene, budget.max_reflections)

    if budget.max_reflections > 0:
        dirs, dtheta = launch_lattice(budget.launch_rays)
        grid = np.array([x0, y0, spacing, spacing, scenario.grid_height])
        cells, codes = kernels.trace_capture(tx.position, dirs, a.boxes, a.has_floor, budget.max_reflections,
                                             grid, nx, ny, CAPTURE_ALPHA * dtheta,
                                             budget.max_path_length, base)
        pairs = np.unique(np.stack([cells, codes], axis=1), axis=0) if len(cells) else np.zeros((0, 2), np.int64)
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)

    active = np.flatnonzero(~excluded)
    tasks = []
    for start in range(0, len(active), CHUNK_CELLS):
        ids = active[start:start + CHUNK_CELLS]
        lo_i = np.searchsorted(pairs[:, 0], ids[0], side="left")
        hi_i = np.searchsorted(pairs[:, 0], ids[-1], side="right")
        sub = pairs[lo_i:hi_i]
        sub = sub[np.isin(sub[:, 0], ids)]
        local = np.searchsorted(ids, sub[:, 0])
        tasks.append((rx_all[ids], local.astype(np.int64), sub[:, 1].astype(np.int64)))

    ctx = _Context(tx, rx, a.boxes, a.has_floor, a.edges, a.kind, a.eps_r, a.sigma, a.dh,
                   waveform.frequencies(), waveform.weights(), budget.max_reflections,
                   budget.enable_diffraction, base)
    results = []
    if workers == 1 or len(tasks) <= 1:
        _init_worker(ctx)
        for i, t in enumerate(tasks):
            results.append(_process_chunk(t))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            for i, r in enumerate(pool.map(_process_chunk, tasks, chunksize=max(1, len(tasks) // (8 * workers)))):
                results.append(r)
                if progress:
                    progress(i + 1, len(tasks))

    power = np.full(nx * ny, -np.inf)
    count = np.zeros(nx * ny, dtype=np.int64)
    if results:
        power[active] = np.concatenate([r[0] for r in results]) + link.tx_power_dbm
        count[active] = np.concatenate([r[1] for r in results])
    pl = link.tx_power_dbm - power
    safe = (pl <= link.max_safe_path_loss_db) & (power >= link.sensitivity_dbm) & ~excluded
    return CoverageGrid(np.array([x0, y0, scenario.grid_height]), (x1 - x0, y1 - y0), spacing,
                        power.reshape(ny, nx), count.reshape(ny, nx), safe.reshape(ny, nx),
                        excluded.reshape(ny, nx), link.tx_power_dbm, scenario)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


# -- output ---------------------------------------------------------------------------------

def _fmt_power(p: float) -> str:
    return "-inf" if p == -np.inf else f"{p:.2f}"


def write_grid_csv(grid: CoverageGrid, destination) -> None:
    """One row per non-excluded cell, x fastest."""
    lines = ["x_m,y_m,z_m,power_dbm,path_count,safe"]
    z = grid.origin[2]
    xs, ys = grid.xs, grid.ys
    ny, nx = grid.shape
    for iy in range(ny):
        for ix in range(nx):
            if grid.excluded[iy, ix]:
                continue
            lines.append(f"{xs[ix]:.4f},{ys[iy]:.4f},{z:.4f},{_fmt_power(grid.power_dbm[iy, ix])},"
                         f"{int(grid.path_count[iy, ix])},{int(bool(grid.safe[iy, ix]))}")
    Path(destination).write_text("\n".join(lines) + "\n")


def colormap(t: np.ndarray) -> np.ndarray:
    """Linear blue -> green -> red for t in [0, 1]; returns uint8 (..., 3)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    lo = t < 0.5
    r = np.where(lo, 0.0, 2 * t - 1)
    g = np.where(lo, 2 * t, 2 - 2 * t)
    b = np.where(lo, 1 - 2 * t, 0.0)
    return np.round(np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


def heatmap_pixels(grid: CoverageGrid, scale=DEFAULT_SCALE) -> np.ndarray:
    lo, hi = scale
    if not lo < hi:
        raise ConfigurationError("heatmap scale needs min < max")
    p = grid.power_dbm
    finite = np.isfinite(p)
    img = colormap(np.where(finite, (p - lo) / (hi - lo), 0.0))
    img[~finite] = (64, 64, 64)
    img[grid.excluded] = (0, 0, 0)
    return img


def write_heatmap(grid: CoverageGrid, destination, scale=DEFAULT_SCALE) -> None:
    """Binary P6 pixmap, one pixel per cell, first row = lowest y."""
    img = heatmap_pixels(grid, scale)
    ny, nx = grid.shape
    with open(destination, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def warehouse_scene(params: WarehouseParams = WarehouseParams()) -> Scene:
    return build_warehouse(params)


# -- grid regions ---------------------------------------------------------------------------

def under_rack_mask(grid: CoverageGrid, scene: Scene) -> np.ndarray:
    """Cells whose centre lies under a rack footprint (between floor and rack)."""
    gx, gy = np.meshgrid(grid.xs, grid.ys)
    mask = np.zeros(gx.shape, dtype=bool)
    for b, _ in scene.boxes:
        lo, hi = b.min_corner, b.max_corner
        if grid.origin[2] < lo[2]:
            mask |= (gx > lo[0]) & (gx < hi[0]) & (gy > lo[1]) & (gy < hi[1])
    return mask


def corridor_mask(grid: CoverageGrid, params: WarehouseParams = WarehouseParams()) -> np.ndarray:
    """Cells in the corridors between clusters, inside the rack field."""
    gx, gy = np.meshgrid(grid.xs, grid.ys)
    mx, my = params.margins
    fx, fy = params.field_size
    cx, cy = params.cluster_size
    nx, ny = params.cluster_grid
    inside = (gx > mx) & (gx < mx + fx) & (gy > my) & (gy < my + fy)
    corr = np.zeros(gx.shape, dtype=bool)
    for i in range(1, nx):
        a = mx + i * cx + (i - 1) * params.corridor_w
        corr |= (gx > a) & (gx < a + params.corridor_w)
    for j in range(1, ny):
        a = my + j * cy + (j - 1) * params.corridor_w
        corr |= (gy > a) & (gy < a + params.corridor_w)
    return inside & corr
