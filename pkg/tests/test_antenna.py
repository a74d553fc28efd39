import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uwbrt.antenna import Antenna, pattern_exponent, pattern_gain, polarization_vector
from conftest import unit

G0 = 10 ** 0.3


def test_pattern_examples():
    a = Antenna((0, 0, 0))
    assert pattern_gain(a, (1, 0, 0)) == pytest.approx(G0, rel=1e-12)
    assert pattern_gain(a, (0, 0, 1)) == pytest.approx(0.0, abs=1e-300)
    d = (np.sin(np.radians(60)), 0.0, np.cos(np.radians(60)))
    assert pattern_gain(a, d) == pytest.approx(G0 / 2, abs=1e-9)
    assert pattern_exponent(60.0) == pytest.approx(4.818, abs=1e-3)


def test_polarization_examples():
    a = Antenna((0, 0, 0))
    assert np.allclose(polarization_vector(a, (1, 0, 0)), [0, 0, 1])
    assert np.allclose(polarization_vector(a, unit((1, 0, 1))), unit((-1, 0, 1)))
    with pytest.raises(ValueError):
        polarization_vector(a, (0, 0, 1))


def test_named_polarizations():
    assert np.allclose(Antenna.with_polarization((0, 0, 0), "horizontal-x").axis, [1, 0, 0])
    with pytest.raises(ValueError):
        Antenna.with_polarization((0, 0, 0), "circular")
    with pytest.raises(ValueError):
        Antenna((0, 0, 0), axis=(0, 0, 2))


dirs = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 1e-2)


@given(dirs, st.sampled_from(["vertical", "horizontal-x", "horizontal-y"]))
def test_pattern_and_polarization_properties(d, pol):
    a = Antenna.with_polarization((0, 0, 0), pol)
    d = unit(d)
    g = pattern_gain(a, d)
    assert 0.0 <= g <= G0 + 1e-12
    assert pattern_gain(a, -d) == pytest.approx(g)
    if np.linalg.norm(np.cross(a.axis, d)) > 1e-6:
        p = polarization_vector(a, d)
        assert np.linalg.norm(p) == pytest.approx(1.0)
        assert abs(p @ d) < 1e-9
        assert np.allclose(a.polarizations(d[None])[0], p)
