"""Surface materials and polarisation-resolved reflection coefficients.

Time convention is exp(+j w t); a lossy dielectric has permittivity
``eps_r - j sigma / (w eps0)``.  ``r_perp`` applies to the field component
normal to the plane of incidence and ``r_par`` to the in-plane component,
referred to the ray-fixed basis used in :mod:`uwbrt.field`, so a perfect
conductor gives ``(-1, +1)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

C0 = 299792458.0
EPS0 = 8.8541878128e-12


class MaterialKind(str, enum.Enum):
    PEC = "PEC"
    DIELECTRIC = "Dielectric"


@dataclass(frozen=True)
class Material:
    kind: MaterialKind = MaterialKind.PEC
    eps_r: float = 1.0
    sigma: float = 0.0
    roughness_dh: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MaterialKind(self.kind))
        if self.eps_r < 1.0:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.roughness_dh < 0.0:
            raise ValueError(f"roughness_dh must be >= 0, got {self.roughness_dh}")

    @property
    def is_pec(self) -> bool:
        return self.kind is MaterialKind.PEC

    def with_roughness(self, dh: float) -> "Material":
        return Material(self.kind, self.eps_r, self.sigma, dh)

    def complex_permittivity(self, frequency: float) -> complex:
        return complex(self.eps_r, -self.sigma / (2.0 * np.pi * frequency * EPS0))

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if not self.is_pec:
            out.update(eps_r=self.eps_r, sigma=self.sigma)
        out["roughness_dh"] = self.roughness_dh
        return out


PEC = Material(MaterialKind.PEC)
CONCRETE = Material(MaterialKind.DIELECTRIC, eps_r=7.0, sigma=0.015)


@dataclass(frozen=True)
class ReflectionCoeffs:
    r_perp: complex
    r_par: complex
    theta_i: float
    frequency: float


@dataclass(frozen=True)
class RoughnessContext:
    dh: float
    lambda0: float
    theta_i: float

    def __post_init__(self):
        if self.dh < 0 or self.lambda0 <= 0 or not 0.0 <= self.theta_i < np.pi / 2:
            raise ValueError("need dh >= 0, lambda0 > 0 and 0 <= theta_i < pi/2")

    @classmethod
    def at(cls, dh: float, theta_i: float, frequency: float) -> "RoughnessContext":
        return cls(dh, C0 / frequency, theta_i)


def _check_angle(theta_i, frequency):
    if not 0.0 <= theta_i < np.pi / 2:
        raise ValueError(f"theta_i must lie in [0, pi/2), got {theta_i}")
    if frequency <= 0:
        raise ValueError("frequency must be positive")


def fresnel_coefficients(material: Material, theta_i: float, frequency: float) -> ReflectionCoeffs:
    """Flat-surface reflection coefficients at incidence angle ``theta_i``."""
    _check_angle(theta_i, frequency)
    if material.is_pec:
        return ReflectionCoeffs(complex(-1.0), complex(1.0), theta_i, frequency)
    eps = material.complex_permittivity(frequency)
    cos_t = np.cos(theta_i)
    root = np.sqrt(eps - np.sin(theta_i) ** 2)
    r_perp = (cos_t - root) / (cos_t + root)
    r_par = (eps * cos_t - root) / (eps * cos_t + root)
    return ReflectionCoeffs(complex(r_perp), complex(r_par), theta_i, frequency)


def transmitted_fractions(material: Material, theta_i: float, frequency: float) -> tuple[float, float]:
    """Fraction of incident normal power flux transmitted, (perp, par).

    Only meaningful for dielectrics; used to check energy balance.
    """
    _check_angle(theta_i, frequency)
    if material.is_pec:
        return 0.0, 0.0
    eps = material.complex_permittivity(frequency)
    c = fresnel_coefficients(material, theta_i, frequency)
    cos_t = np.cos(theta_i)
    root = np.sqrt(eps - np.sin(theta_i) ** 2)
    t_perp = abs(1 + c.r_perp) ** 2 * root.real / cos_t
    t_par = abs(1 + c.r_par) ** 2 * (root / eps).real / cos_t
    return float(t_perp), float(t_par)


def roughness_factor(ctx: RoughnessContext) -> float:
    """Coherent specular attenuation of a Gaussian rough surface, in (0, 1]."""
    g = np.pi * ctx.dh * np.cos(ctx.theta_i) / ctx.lambda0
    return float(np.exp(-8.0 * g * g))


def effective_reflection(material: Material, theta_i: float, frequency: float) -> ReflectionCoeffs:
    flat = fresnel_coefficients(material, theta_i, frequency)
    if material.roughness_dh == 0.0:
        return flat
    k = roughness_factor(RoughnessContext.at(material.roughness_dh, theta_i, frequency))
    return ReflectionCoeffs(flat.r_perp * k, flat.r_par * k, theta_i, frequency)
