"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--grid-spacing 1.0]
"""

import argparse
import time

import numpy as np

from uwbrt import kernels
from uwbrt.field import Waveform
from uwbrt.runner import get_preset, run_scenario
from uwbrt.scene import build_warehouse
from uwbrt.tracer import TraceBudget, code_base, launch_lattice

NAMES = ("trace_capture", "refine", "diffract", "segments_clear", "reflection_dyadics")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(scene):
    a = scene.arrays
    rng = np.random.default_rng(0)
    tx = np.array([11.0, 4.0, 1.5])
    dirs, dt = launch_lattice(20_000)
    grid = np.array([0.0, 0.0, 0.5, 0.5, 0.2])
    rx = np.column_stack([rng.uniform(0, 22, 200), rng.uniform(0, 8, 200), np.full(200, 0.2)])
    sids = np.full((2000, 2), -1, dtype=np.int64)
    sids[:, 0] = rng.integers(0, scene.floor_id + 1, 2000)
    rx_many = rx[rng.integers(0, 200, 2000)]
    chain = np.repeat(rx_many[:, None, :], 3, axis=1)
    chain[:, 0] = tx
    chain[:, 1] = [0.5 * (tx + r) * [1, 1, 0] for r in rx_many]
    nref = np.ones(2000, dtype=np.int64)
    floor = np.full((2000, 1), scene.floor_id, dtype=np.int64)
    freqs = Waveform().frequencies()
    return {
        "trace_capture": lambda k: k.trace_capture(tx, dirs, a.boxes, a.has_floor, 3, grid, 44, 16, 1.5 * dt,
                                                   120.0, code_base(scene, 3)),
        "refine": lambda k: k.refine(tx, rx_many, sids, a.boxes, a.has_floor),
        "diffract": lambda k: k.diffract(tx, rx[:20], a.edges, a.boxes, a.has_floor),
        "segments_clear": lambda k: k.segments_clear(np.repeat(tx[None], 200, 0), rx, a.boxes, a.has_floor),
        "reflection_dyadics": lambda k: k.reflection_dyadics(chain, nref, floor, len(a.boxes), a.kind, a.eps_r,
                                                             a.sigma, a.dh, freqs),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--grid-spacing", type=float, default=1.0)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not available; build with pip install -e . --no-build-isolation")
    scene = build_warehouse()
    backends = {"cython": kernels.compiled_backend, "numpy": kernels.python_backend}

    print(f"{'kernel':20s} {'cython [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, case in kernel_cases(scene).items():
        t = {b: best_of(lambda: case(mod), args.repeat) for b, mod in backends.items()}
        print(f"{name:20s} {t['cython']:12.4f} {t['numpy']:12.4f} {t['numpy'] / t['cython']:9.1f}")

    scenario = get_preset("fig4").with_updates(grid_spacing=args.grid_spacing)
    budget = TraceBudget(max_reflections=4, launch_rays=20_000)
    saved = {n: getattr(kernels, n) for n in NAMES}
    t = {}
    grids = {}
    try:
        for b, mod in backends.items():
            for n in NAMES:
                setattr(kernels, n, getattr(mod, n))
            t0 = time.perf_counter()
            grids[b] = run_scenario(scene, scenario, budget, Waveform(band_samples=4))
            t[b] = time.perf_counter() - t0
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)
    diff = np.nanmax(np.abs(grids["cython"].power_dbm - grids["numpy"].power_dbm))
    ny, nx = grids["cython"].shape
    print(f"{'grid sweep ' + f'{nx}x{ny}':20s} {t['cython']:12.4f} {t['numpy']:12.4f} "
          f"{t['numpy'] / t['cython']:9.1f}   max |dP| = {diff:.1e} dB")


if __name__ == "__main__":
    main()
