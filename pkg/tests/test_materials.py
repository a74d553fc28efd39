import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from uwbrt.materials import (CONCRETE, PEC, Material, RoughnessContext, effective_reflection,
                             fresnel_coefficients, roughness_factor, transmitted_fractions)

F0 = 3.994e9
LAM = 299792458.0 / F0


def scalar_fresnel(eps_r, sigma, theta, f):
    """Independent textbook evaluation with cmath."""
    eps = complex(eps_r, -sigma / (2 * math.pi * f * 8.8541878128e-12))
    c, s = math.cos(theta), math.sin(theta)
    root = cmath.sqrt(eps - s * s)
    return (c - root) / (c + root), (eps * c - root) / (eps * c + root)


def test_pec():
    for th in (0.0, 0.3, 1.2, 1.5):
        c = fresnel_coefficients(PEC, th, F0)
        assert (c.r_perp, c.r_par) == (-1, 1)


def test_concrete_normal_incidence():
    c = fresnel_coefficients(CONCRETE, 0.0, F0)
    assert c.r_perp == pytest.approx(-0.4514 + 0.0019j, abs=1e-4)
    # in the ray-fixed basis the in-plane coefficient is the negative at normal incidence
    assert c.r_par == pytest.approx(-c.r_perp, abs=1e-12)
    ref = scalar_fresnel(7.0, 0.015, 0.0, F0)
    assert c.r_perp == pytest.approx(ref[0], abs=1e-12)
    assert c.r_par == pytest.approx(ref[1], abs=1e-12)


def test_concrete_grazing_limit():
    c = fresnel_coefficients(CONCRETE, math.radians(89.9), F0)
    assert abs(c.r_perp + 1) < 0.02
    assert abs(c.r_par + 1) < 0.02


def test_angle_validation():
    with pytest.raises(ValueError):
        fresnel_coefficients(CONCRETE, math.pi / 2, F0)
    with pytest.raises(ValueError):
        Material("Dielectric", eps_r=0.5)


def test_roughness_values():
    assert roughness_factor(RoughnessContext(0.0, LAM, 0.3)) == 1.0
    k80 = roughness_factor(RoughnessContext.at(0.05, math.radians(80), F0))
    assert k80 == pytest.approx(math.exp(-8 * (math.pi * 0.05 * math.cos(math.radians(80)) / LAM) ** 2))
    assert k80 == pytest.approx(0.348, abs=1e-3)
    k85 = roughness_factor(RoughnessContext.at(0.05, math.radians(85), F0))
    assert k85 == pytest.approx(math.exp(-8 * (math.pi * 0.05 * math.cos(math.radians(85)) / LAM) ** 2))
    assert k85 == pytest.approx(0.766, abs=1e-3)
    assert roughness_factor(RoughnessContext.at(0.05, 0.0, F0)) <= 1e-15


def test_effective_reflection():
    assert effective_reflection(PEC, 0.4, F0) == fresnel_coefficients(PEC, 0.4, F0)
    rough = effective_reflection(PEC.with_roughness(0.05), 0.0, F0)
    assert abs(rough.r_perp) == pytest.approx(6.1e-16, rel=0.05)
    assert abs(rough.r_perp) <= 1e-15


@given(st.floats(1.0, 80.0), st.floats(0.0, 5.0), st.floats(0.0, 1.5))
def test_passive_dielectric(eps_r, sigma, theta):
    m = Material("Dielectric", eps_r, sigma)
    c = fresnel_coefficients(m, theta, F0)
    assert abs(c.r_perp) <= 1 + 1e-12 and abs(c.r_par) <= 1 + 1e-12
    if sigma == 0.0:
        t_perp, t_par = transmitted_fractions(m, theta, F0)
        assert abs(c.r_perp) ** 2 + t_perp == pytest.approx(1.0, abs=1e-9)
        assert abs(c.r_par) ** 2 + t_par == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.0, 0.2), st.floats(0.0, 0.2), st.floats(0.0, 1.5))
def test_roughness_bounded_and_monotone(a, b, theta):
    lo, hi = sorted((a, b))
    k_lo = roughness_factor(RoughnessContext(lo, LAM, theta))
    k_hi = roughness_factor(RoughnessContext(hi, LAM, theta))
    assert 0.0 <= k_hi <= k_lo <= 1.0
