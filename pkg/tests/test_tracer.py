import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, example, given, settings
from hypothesis import strategies as st

from uwbrt import kernels
from uwbrt.geom import angle_between
from uwbrt.materials import PEC
from uwbrt.scene import Floor, Scene
from uwbrt.tracer import (PathBundle, TraceBudget, decode, enumerate_specular_paths,
                          find_diffraction_paths, find_los, geodesic_directions, launch_lattice,
                          refine_specular_path, trace_paths)

RACK = ((0, 0, 0.3), (1.3, 1.3, 2.3))


def specular_errors(path, scene):
    pts = path.points
    out = []
    for k, inter in enumerate(path.interactions[1:-1], start=1):
        n = scene.surface_normal(inter.element_id)
        out.append(abs(angle_between(pts[k - 1] - pts[k], n) - angle_between(pts[k + 1] - pts[k], n)))
    return out


def segments_visible(path, scene):
    pts = path.points
    a = scene.arrays
    return bool(kernels.segments_clear(pts[:-1], pts[1:], a.boxes, a.has_floor).all())


def test_geodesic_lattice_counts():
    for f in (1, 2, 5, 100):
        d = geodesic_directions(f)
        assert len(d) == 10 * f * f + 2
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert len(np.unique(np.round(geodesic_directions(7), 12), axis=0)) == 492
    dirs, spacing = launch_lattice(100_000)
    assert len(dirs) == 100_002
    assert spacing == pytest.approx(np.sqrt(8 * np.pi / (np.sqrt(3) * 100_002)))


def test_los_examples(floor_only):
    p = find_los(floor_only, (0, 0, 1.5), (1, 0, 1.5))
    assert p.is_los and p.total_length == pytest.approx(1.0)
    rack = Scene.from_boxes([RACK], floor=Floor())
    assert find_los(rack, (-1, 0.65, 1.3), (2.3, 0.65, 1.3)) is None


def test_los_under_rack_gap():
    rack = Scene.from_boxes([RACK], floor=Floor())
    # line from (-3, .65, 1.5) to (0.6, .65, 0.2): height at the rack face x = 0
    def z_at_face(tx, rx):
        return tx[2] + (rx[2] - tx[2]) * (0 - tx[0]) / (rx[0] - tx[0])
    clear_tx, rx = np.array([-10.0, 0.65, 1.5]), np.array([0.6, 0.65, 0.2])
    blocked_tx = np.array([-3.0, 0.65, 1.5])
    assert z_at_face(clear_tx, rx) < 0.3 < z_at_face(blocked_tx, rx)
    assert find_los(rack, clear_tx, rx) is not None
    assert find_los(rack, blocked_tx, rx) is None


def test_two_ray_floor_bounce(floor_only):
    paths = enumerate_specular_paths(floor_only, (0, 0, 1.5), (5, 0, 1.5))
    assert len(paths) == 1
    (bounce,) = paths
    assert np.allclose(bounce.points[1], [2.5, 0, 0], atol=1e-9)
    theta = angle_between(bounce.points[0] - bounce.points[1], [0, 0, 1])
    assert np.degrees(theta) == pytest.approx(np.degrees(np.arctan(2.5 / 1.5)))
    assert len(trace_paths(floor_only, (0, 0, 1.5), (5, 0, 1.5))) == 2
    refined = refine_specular_path(floor_only, (0, 0, 1.5), (5, 0, 1.5), [("R", floor_only.floor_id)])
    assert np.allclose(refined.points[1], [2.5, 0, 0], atol=1e-9)


def test_single_wall_image():
    wall = Scene.from_boxes([((1, -20, -20), (2, 20, 20))])
    paths = enumerate_specular_paths(wall, (0, 0, 1), (0, 1, 1))
    assert len(paths) == 1
    assert paths[0].signature == (("R", 0),)
    assert np.allclose(paths[0].points[1], [1, 0.5, 1])
    assert enumerate_specular_paths(wall, (0, 0, 1), (0, 1, 1), TraceBudget(max_reflections=0)) == []


def test_refine_rejections(floor_only):
    rack = Scene.from_boxes([RACK], floor=Floor())
    # bounce on the top face cannot reach points left and right at low height
    assert refine_specular_path(rack, (-1, 0.65, 1.0), (3, 0.65, 1.0), [5]) is None
    assert refine_specular_path(floor_only, (0, 0, 1), (1, 0, 1), []).is_los


def test_diffraction_examples():
    rack = Scene.from_boxes([RACK], floor=Floor())
    tx, rx = np.array([-1.5, -0.3, 2.8]), np.array([3.0, 1.0, 0.9])
    assert find_los(rack, tx, rx) is None
    paths = find_diffraction_paths(rack, tx, rx)
    vertical = [abs(p.diffraction.normal[2]) == 1.0 for p in paths]
    assert any(vertical) and not all(vertical)  # around a side and over the top
    for p in paths:
        edge = rack.edge(p.diffraction.element_id)
        q = p.diffraction.point
        t = (q - edge.start) @ edge.direction
        ts = np.linspace(max(0, t - 1e-3), min(edge.length, t + 1e-3), 2001)
        pts = edge.start + ts[:, None] * edge.direction
        lengths = np.linalg.norm(pts - tx, axis=1) + np.linalg.norm(rx - pts, axis=1)
        assert abs(ts[np.argmin(lengths)] - t) <= 1e-6
        assert angle_between(q - tx, edge.direction) == pytest.approx(
            angle_between(rx - q, edge.direction), abs=1e-9)
        assert segments_visible(p, rack)
    assert find_diffraction_paths(rack, tx, rx, TraceBudget(enable_diffraction=False)) == []


def test_symmetric_diffraction_point():
    rack = Scene.from_boxes([RACK])
    tx, rx = np.array([-1.0, 0.65, 3.0]), np.array([2.3, 0.65, 3.0])
    for p in find_diffraction_paths(rack, tx, rx):
        e = rack.edge(p.diffraction.element_id)
        if e.direction[1] != 0:
            assert np.allclose(p.diffraction.point[1], 0.65)


def test_corridor_paths_exact(corridor_scene):
    tx, rx = np.array([0.5, 2.05, 1.5]), np.array([5.2, 1.7, 0.4])
    paths = enumerate_specular_paths(corridor_scene, tx, rx)
    sigs = {tuple(s for _, s in p.signature) for p in paths}
    brute = set()
    for k in (1, 2):
        for seq in itertools.product(range(corridor_scene.floor_id + 1), repeat=k):
            if refine_specular_path(corridor_scene, tx, rx, seq) is not None:
                brute.add(seq)
    assert brute == {s for s in sigs if len(s) <= 2}
    for p in paths:
        assert max(specular_errors(p, corridor_scene)) <= 1e-9
        assert segments_visible(p, corridor_scene)


def test_decode_round_trip():
    base = 17
    for seq in [(0,), (3, 15), (15, 0, 4, 4)]:
        code = sum((s + 1) * base ** k for k, s in enumerate(seq))
        assert decode(code, base) == seq


def test_bundle_from_paths(corridor_scene):
    tx, rx = np.array([0.5, 2.05, 1.5]), np.array([5.2, 1.7, 0.4])
    paths = trace_paths(corridor_scene, tx, rx)
    b = PathBundle.from_paths(paths)
    assert b.count == len(paths)
    spec = [p for p in paths if p.diffraction is None]
    assert np.allclose(np.sort(b.chain_lengths()), np.sort([p.total_length for p in spec]))


points = st.tuples(st.floats(-1, 9), st.floats(-1, 5), st.floats(0.05, 2.8))


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(points, points)
@example(a=(0.0, 1.0, 1.0), b=(5e-324, 0.0, 2.0))
def test_path_invariants(corridor_scene, a, b):
    a, b = np.array(a), np.array(b)
    if corridor_scene.inside_any_box(a) or corridor_scene.inside_any_box(b) or np.linalg.norm(a - b) < 0.05:
        return
    budget = TraceBudget(launch_rays=20_000, max_reflections=4)
    paths = trace_paths(corridor_scene, a, b, budget)
    keys = [p.sort_key() for p in paths]
    assert keys == sorted(keys)
    for p in paths:
        assert segments_visible(p, corridor_scene)
        if p.diffraction is None and not p.is_los:
            assert max(specular_errors(p, corridor_scene)) <= 1e-9
    fewer = enumerate_specular_paths(corridor_scene, a, b, TraceBudget(launch_rays=20_000, max_reflections=2))
    more = [p for p in paths if p.diffraction is None and not p.is_los]
    assert len(fewer) <= len(more)
    swapped = {tuple(reversed(p.signature)) for p in trace_paths(corridor_scene, b, a, budget)}
    assert swapped == {p.signature for p in paths}


def test_pec_floor_scene_accepts_floor_signature(pec_floor_only):
    p = refine_specular_path(pec_floor_only, (0, 0, 1), (4, 0, 3), [pec_floor_only.floor_id])
    assert p is not None and p.interactions[1].material == PEC
