import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from uwbrt.antenna import Antenna
from uwbrt.field import (Waveform, band_averaged_power, band_power_from_gains, bundle_gains,
                         coherent_receive_power, path_complex_gain, path_gains, path_loss,
                         transition_function, utd_coefficients)
from uwbrt.geom import Box
from uwbrt.scene import Scene
from uwbrt.tracer import PathBundle, TraceBudget, enumerate_specular_paths, find_los, trace_paths
from conftest import unit

F0 = 3.994e9
LAM = 299792458.0 / F0


def fspl_db(d, f=F0):
    return 20 * np.log10(4 * np.pi * d * f / 299792458.0)


def vv(a, b):
    return Antenna.with_polarization(a, "vertical"), Antenna.with_polarization(b, "vertical")


def test_friis_gain(floor_only):
    empty = Scene.from_boxes([])
    tx, rx = vv((0, 0, 1), (10, 0, 1))
    g = path_complex_gain(find_los(empty, tx.position, rx.position), tx, rx, F0)
    assert 20 * np.log10(abs(g.value)) == pytest.approx(-58.47, abs=0.01)
    assert fspl_db(10) == pytest.approx(64.47, abs=0.01)
    assert g.delay == pytest.approx(10 / 299792458.0)


def test_cross_polarized_los_is_zero():
    empty = Scene.from_boxes([])
    tx = Antenna.with_polarization((0, 0, 1), "horizontal-y")
    rx = Antenna.with_polarization((10, 0, 1), "vertical")
    assert path_complex_gain(find_los(empty, tx.position, rx.position), tx, rx, F0).value == 0


def test_pec_floor_bounce_flips_perpendicular_field(pec_floor_only):
    tx = Antenna.with_polarization((0, 0, 1.5), "horizontal-y")
    rx = Antenna.with_polarization((5, 0, 1.5), "horizontal-y")
    (bounce,) = enumerate_specular_paths(pec_floor_only, tx.position, rx.position)
    # same unfolded geometry without the floor: straight line to the image receiver
    image = Antenna.with_polarization((5, 0, -1.5), "horizontal-y")
    straight = find_los(Scene.from_boxes([]), tx.position, image.position)
    g_b = path_complex_gain(bounce, tx, rx, F0).value
    g_s = path_complex_gain(straight, tx, image, F0).value
    assert g_b == pytest.approx(-g_s, rel=1e-12)


def test_power_examples():
    empty = Scene.from_boxes([])
    tx, rx = vv((0, 0, 1), (10, 0, 1))
    los = find_los(empty, tx.position, rx.position)
    p1 = coherent_receive_power([los], tx, rx, F0)
    assert p1 == pytest.approx(-58.47, abs=0.01)
    assert coherent_receive_power([los, los], tx, rx, F0) - p1 == pytest.approx(6.0206, abs=1e-4)
    assert coherent_receive_power([], tx, rx, F0) == -np.inf
    g = np.array([[0.3 + 0.1j], [-0.3 - 0.1j]])
    assert band_power_from_gains(g, np.ones(1), 0.0) == -np.inf
    assert band_averaged_power([los], tx, rx, Waveform(band_samples=1)) == p1
    assert band_averaged_power([los], tx, rx) == pytest.approx(p1, abs=0.01)


def test_band_average_fills_narrowband_fade():
    w = Waveform()
    f = w.frequencies()
    tau = 10e-9
    g = np.stack([np.exp(-2j * np.pi * f * 0.0),
                  -0.9 * np.exp(-2j * np.pi * (f - F0) * tau)])
    narrow = band_power_from_gains(np.array([[1.0], [-0.9]]), np.ones(1), 0.0)  # at fc
    wide = band_power_from_gains(g, w.weights(), 0.0)
    assert narrow == pytest.approx(-20.0, abs=1e-9)
    assert wide - narrow >= 10.0


def test_waveform():
    w = Waveform()
    f = w.frequencies()
    assert len(f) == 16 and f[0] == pytest.approx(F0 - 234e6) and f[-1] == pytest.approx(F0 + 234e6)
    # Gaussian spectrum 10 dB down at the band edges
    assert w.weights()[0] == pytest.approx(0.1)
    assert np.array_equal(Waveform(band_samples=1).frequencies(), [F0])
    with pytest.raises(ValueError):
        Waveform(band_samples=0)


def test_path_loss_examples():
    assert path_loss(-58.47) == (pytest.approx(58.47), True)
    assert path_loss(-106.0) == (pytest.approx(106.0), False)
    assert path_loss(0.0) == (0.0, True)
    assert path_loss(-np.inf)[1] is False


def test_transition_function_limits():
    x = np.array([1e-6, 1e-3, 100.0, 1e4])
    F = transition_function(x)
    small = np.sqrt(np.pi * x) * np.exp(1j * (np.pi / 4 + x))
    assert F[0] == pytest.approx(small[0], rel=1e-2)
    assert abs(F[-1]) == pytest.approx(1.0, abs=1e-4)
    assert abs(F[2] - (1 + 0.5j / 100)) < 1e-3


def _rack_edge():
    box = Box((0, 0, 0.3), (1.3, 1.3, 2.3))
    # the top edge at x = 1.3 running along y
    return next(e for e in box.edges() if e.direction[1] != 0 and e.start[0] == 1.3 and e.start[2] == 2.3)


def test_utd_keller_cone_check():
    e = _rack_edge()
    with pytest.raises(ValueError):
        utd_coefficients(e, unit((1, 0, -1)), unit((1, 1, -1)), F0, source_distance=2, observation_distance=2)


def test_soft_coefficient_vanishes_on_faces():
    e = _rack_edge()
    s_in = unit(e.normal_b - 0.5 * e.normal_a - 0.2 * e.direction)  # arrives from outside
    # outgoing grazing along face a (phi = 0) keeping the Keller cone
    cb = s_in @ e.direction
    perp = np.sqrt(1 - cb ** 2)
    out_a = cb * e.direction + perp * (-e.normal_b)
    out_b = cb * e.direction + perp * (-e.normal_a)
    for out in (out_a, out_b):
        ds, dh = utd_coefficients(e, s_in, out, F0, source_distance=3, observation_distance=2)
        assert abs(ds) < 1e-9 * abs(dh)


def test_diffraction_weak_deep_in_lit_region():
    rack = Scene.from_boxes([((0, 0, 0.3), (1.3, 1.3, 2.3))])
    tx, rx = vv((-2, 0.65, 3.5), (3.5, 0.65, 3.6))
    paths = trace_paths(rack, tx.position, rx.position)
    g = path_gains(paths, tx, rx, [F0])[:, 0]
    los = abs(g[[p.is_los for p in paths]][0])
    diff = [abs(x) for x, p in zip(g, paths) if p.diffraction is not None]
    assert diff and max(diff) < 0.2 * los


def test_bundle_route_matches_object_route(corridor_scene):
    scene = corridor_scene.with_box_roughness(0.02)
    tx = Antenna.with_polarization((0.5, 2.05, 1.5), "horizontal-y")
    rx = Antenna.with_polarization((5.2, 1.7, 0.4), "vertical")
    paths = trace_paths(scene, tx.position, rx.position, TraceBudget(max_reflections=4))
    freqs = Waveform(band_samples=3).frequencies()
    order = [p for p in paths if p.diffraction is None] + [p for p in paths if p.diffraction is not None]
    ref = path_gains(order, tx, rx, freqs)
    fast = bundle_gains(PathBundle.from_paths(paths), scene.arrays, tx, rx, freqs)
    assert np.allclose(fast, ref, rtol=1e-10, atol=1e-18)


pts = st.tuples(st.floats(-1, 9), st.floats(-1, 5), st.floats(0.05, 2.8))
pols = st.sampled_from(["vertical", "horizontal-x", "horizontal-y"])


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(pts, pts, pols, pols)
def test_path_gain_reciprocity(corridor_scene, a, b, pa, pb):
    a, b = np.array(a), np.array(b)
    if corridor_scene.inside_any_box(a) or corridor_scene.inside_any_box(b) or np.linalg.norm(a - b) < 0.05:
        return
    budget = TraceBudget(launch_rays=10_000, max_reflections=3)
    A, B = Antenna.with_polarization(a, pa), Antenna.with_polarization(b, pb)
    fwd = {p.signature: path_complex_gain(p, A, B, F0).value for p in trace_paths(corridor_scene, a, b, budget)}
    rev = {tuple(reversed(p.signature)): path_complex_gain(p, B, A, F0).value
           for p in trace_paths(corridor_scene, b, a, budget)}
    assert fwd.keys() == rev.keys()
    for k in fwd:
        assert fwd[k] == pytest.approx(rev[k], rel=1e-9, abs=1e-15)
