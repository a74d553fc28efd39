"""Dipole-like antenna: |sin|^n gain pattern and polarisation vectors."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .geom import Vec3, vec

POLARIZATIONS = {
    "vertical": (0.0, 0.0, 1.0),
    "horizontal-x": (1.0, 0.0, 0.0),
    "horizontal-y": (0.0, 1.0, 0.0),
}


def polarization_axis(name: str) -> Vec3:
    try:
        return vec(POLARIZATIONS[name])
    except KeyError:
        raise ValueError(f"unknown polarization {name!r}; expected one of {sorted(POLARIZATIONS)}") from None


def pattern_exponent(hpbw_deg: float) -> float:
    """Exponent n with sin(90 - hpbw/2)^n = 1/2."""
    return float(np.log(0.5) / np.log(np.cos(np.radians(hpbw_deg) / 2.0)))


@dataclass(frozen=True)
class Antenna:
    position: Vec3
    axis: Vec3 = field(default_factory=lambda: vec(0, 0, 1))
    boresight_gain_dbi: float = 3.0
    e_plane_hpbw_deg: float = 60.0
    tx_power_dbm: float = 0.0
    sensitivity_dbm: float = -106.0

    def __post_init__(self):
        object.__setattr__(self, "position", vec(self.position))
        axis = vec(self.axis)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("antenna axis must be a unit vector")
        object.__setattr__(self, "axis", axis)
        if not 0.0 < self.e_plane_hpbw_deg < 180.0:
            raise ValueError("e_plane_hpbw_deg must lie in (0, 180)")

    @classmethod
    def with_polarization(cls, position, polarization: str, **kwargs) -> "Antenna":
        return cls(position, polarization_axis(polarization), **kwargs)

    @cached_property
    def peak_gain(self) -> float:
        return 10.0 ** (self.boresight_gain_dbi / 10.0)

    @cached_property
    def exponent(self) -> float:
        return pattern_exponent(self.e_plane_hpbw_deg)

    def moved_to(self, position) -> "Antenna":
        return replace(self, position=vec(position))

    def gains(self, directions: np.ndarray) -> np.ndarray:
        """Vectorised :func:`pattern_gain` over (n, 3) unit directions."""
        cos = np.clip(np.asarray(directions) @ self.axis, -1.0, 1.0)
        sin = np.sqrt(np.maximum(0.0, 1.0 - cos * cos))
        return self.peak_gain * sin ** self.exponent

    def polarizations(self, directions: np.ndarray) -> np.ndarray:
        """Vectorised polarisation vectors; rows in the pattern null are zero."""
        d = np.asarray(directions, dtype=float)
        p = self.axis[None, :] - (d @ self.axis)[:, None] * d
        n = np.linalg.norm(p, axis=1)
        out = np.zeros_like(p)
        ok = n > 1e-12
        out[ok] = p[ok] / n[ok, None]
        return out


def pattern_gain(ant: Antenna, direction) -> float:
    """Linear gain towards ``direction`` (unit vector)."""
    return float(ant.gains(vec(direction)[None, :])[0])


def polarization_vector(ant: Antenna, direction) -> Vec3:
    d = vec(direction)
    if np.linalg.norm(np.cross(ant.axis, d)) < 1e-9:
        raise ValueError("polarization is undefined along the antenna axis (pattern null)")
    p = ant.axis - (ant.axis @ d) * d
    return p / np.linalg.norm(p)
