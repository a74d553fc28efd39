"""Complex path gains, UTD edge diffraction and received power.

Every path contributes a dimensionless voltage transfer value

    sqrt(G_tx G_rx) * lambda / (4 pi) * A * exp(-j k L) * (p_rx . T p_tx)

where ``A = 1/L`` for specular chains (unfolded length ``L``) and
``A = 1 / sqrt(s s' (s + s'))`` for a diffracted path with legs ``s'`` and
``s``; ``T`` is the product of per-bounce reflection dyadics or the UTD
dyadic, and ``p_tx``, ``p_rx`` the antenna polarisation vectors along the
departure and arrival directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import modfresnelm

from . import kernels
from .antenna import Antenna
from .geom import Edge, angle_between
from .materials import C0, effective_reflection
from .scene import SceneArrays
from .tracer import Kind, PathBundle, PropagationPath

WEDGE_N = 1.5  # exterior angle 270 degrees: right-angle PEC box edge
KELLER_TOL = 1e-6
NO_SIGNAL_DBM = -np.inf


@dataclass(frozen=True)
class Waveform:
    center_freq: float = 3.994e9
    bandwidth: float = 468e6
    band_samples: int = 16

    def __post_init__(self):
        if self.center_freq <= 0 or self.bandwidth < 0 or self.band_samples < 1:
            raise ValueError("need center_freq > 0, bandwidth >= 0, band_samples >= 1")

    @property
    def sigma_f(self) -> float:
        """Std. dev. of the Gaussian power spectrum whose -10 dB width is ``bandwidth``."""
        return (self.bandwidth / 2.0) / np.sqrt(2.0 * np.log(10.0))

    def frequencies(self) -> np.ndarray:
        if self.band_samples == 1 or self.bandwidth == 0:
            return np.array([self.center_freq])
        half = self.bandwidth / 2.0
        return np.linspace(self.center_freq - half, self.center_freq + half, self.band_samples)

    def weights(self) -> np.ndarray:
        f = self.frequencies()
        if len(f) == 1:
            return np.ones(1)
        return np.exp(-((f - self.center_freq) ** 2) / (2.0 * self.sigma_f ** 2))


@dataclass(frozen=True)
class ComplexFieldGain:
    value: complex
    delay: float


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 0.0
    sensitivity_dbm: float = -106.0
    max_safe_path_loss_db: float = 85.0

    def __post_init__(self):
        if self.max_safe_path_loss_db <= 0:
            raise ValueError("max_safe_path_loss_db must be positive")


# -- UTD ----------------------------------------------------------------------

def transition_function(x):
    """Kouyoumjian-Pathak transition function F(x) for x >= 0."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(x)
    return 2j * s * np.exp(1j * x) * modfresnelm(s)[0]


def _cot_f(beta, sign, k, L, n):
    """cot((pi + sign*beta) / 2n) * F(k L a^sign(beta)), with its finite limit
    on a shadow or reflection boundary."""
    N = np.round((beta + sign * np.pi) / (2.0 * np.pi * n))
    eps = np.pi + sign * beta - 2.0 * np.pi * n * sign * N
    a = 2.0 * np.cos((2.0 * np.pi * n * N - beta) / 2.0) ** 2
    # eps > 0 on the lit side of every boundary; within the tolerance band the
    # grazing geometric ray counts as present, as in the visibility test
    near = np.abs(eps) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        val = transition_function(k * L * a) / np.tan((np.pi + sign * beta) / (2.0 * n))
    limit = n * np.exp(1j * np.pi / 4) * np.sqrt(2.0 * np.pi * k * L)
    return np.where(near, limit, val)


def utd_wedge(k, L, beta0, phi, phi_p, n=WEDGE_N):
    """Soft and hard PEC wedge coefficients (arrays broadcast)."""
    pre = -np.exp(-1j * np.pi / 4) / (2.0 * n * np.sqrt(2.0 * np.pi * k) * np.sin(beta0))
    bm = phi - phi_p
    bp = phi + phi_p
    t_inc = _cot_f(bm, 1, k, L, n) + _cot_f(bm, -1, k, L, n)
    t_ref = _cot_f(bp, 1, k, L, n) + _cot_f(bp, -1, k, L, n)
    return pre * (t_inc - t_ref), pre * (t_inc + t_ref)


def _edge_frames(e, na, nb, s_in, s_out):
    """Ray-fixed unit vectors and wedge angles; all inputs (m, 3)."""
    t0 = -nb
    phi_p = np.mod(np.arctan2((-s_in * na).sum(1), (-s_in * t0).sum(1)), 2 * np.pi)
    phi = np.mod(np.arctan2((s_out * na).sum(1), (s_out * t0).sum(1)), 2 * np.pi)
    cr_in = np.cross(e, s_in)
    sin_b0 = np.linalg.norm(cr_in, axis=1)
    phi_hat_p = -cr_in / sin_b0[:, None]
    beta_hat_p = np.cross(phi_hat_p, s_in)
    cr_out = np.cross(e, s_out)
    phi_hat = cr_out / np.linalg.norm(cr_out, axis=1)[:, None]
    beta_hat = np.cross(phi_hat, s_out)
    return phi_p, phi, sin_b0, phi_hat_p, beta_hat_p, phi_hat, beta_hat


def utd_coefficients(edge: Edge, incident_dir, diffracted_dir, freq: float, *,
                     source_distance: float, observation_distance: float):
    """(d_soft, d_hard) for a right-angle PEC edge.

    Directions are unit vectors of propagation (towards the edge, away from
    it); the distances enter through the spherical-wave parameter
    ``L = s s' / (s + s') sin^2(beta0)``.  The caller applies the spreading
    factor.
    """
    s_in = np.asarray(incident_dir, dtype=float)
    s_out = np.asarray(diffracted_dir, dtype=float)
    b_in = angle_between(s_in, edge.direction)
    b_out = angle_between(s_out, edge.direction)
    if abs(b_in - b_out) > KELLER_TOL:
        raise ValueError(f"directions violate the Keller cone condition ({b_in:.9f} vs {b_out:.9f} rad)")
    k = 2.0 * np.pi * freq / C0
    phi_p, phi, sin_b0, *_ = _edge_frames(edge.direction[None], edge.normal_a[None], edge.normal_b[None],
                                          s_in[None], s_out[None])
    sp, s = source_distance, observation_distance
    L = s * sp / (s + sp) * sin_b0 ** 2
    ds, dh = utd_wedge(k, L, np.arcsin(np.clip(sin_b0, 0, 1)), phi, phi_p)
    return complex(ds[0]), complex(dh[0])


def diffraction_gains(tx_pos, rx_pos, edges: np.ndarray, q: np.ndarray, tx: Antenna, rx: Antenna,
                      freqs: np.ndarray) -> np.ndarray:
    """Complex gains (m, nf) of diffracted paths via points ``q`` on ``edges`` rows.

    ``tx_pos`` and ``rx_pos`` are single points or one row per path.
    """
    m = len(q)
    if m == 0:
        return np.zeros((0, len(freqs)), dtype=complex)
    tx_pos = np.asarray(tx_pos, dtype=float).reshape(-1, 3)
    rx_pos = np.asarray(rx_pos, dtype=float).reshape(-1, 3)
    e, na, nb = edges[:, 3:6], edges[:, 7:10], edges[:, 10:13]
    v_in = q - tx_pos
    sp = np.linalg.norm(v_in, axis=1)
    s_in = v_in / sp[:, None]
    v_out = rx_pos - q
    s = np.linalg.norm(v_out, axis=1)
    s_out = v_out / s[:, None]
    phi_p, phi, sin_b0, phi_hat_p, beta_hat_p, phi_hat, beta_hat = _edge_frames(e, na, nb, s_in, s_out)
    p_tx = tx.polarizations(s_in)
    p_rx = rx.polarizations(-s_out)
    amp = np.sqrt(tx.gains(s_in) * rx.gains(-s_out))
    proj_s = (p_rx * beta_hat).sum(1) * (beta_hat_p * p_tx).sum(1)
    proj_h = (p_rx * phi_hat).sum(1) * (phi_hat_p * p_tx).sum(1)
    k = 2.0 * np.pi * freqs[None, :] / C0
    L = (s * sp / (s + sp) * sin_b0 ** 2)[:, None]
    beta0 = np.arcsin(np.clip(sin_b0, 0.0, 1.0))[:, None]
    ds, dh = utd_wedge(k, L, beta0, phi[:, None], phi_p[:, None])
    pol = -ds * proj_s[:, None] - dh * proj_h[:, None]
    total = (sp + s)[:, None]
    spread = 1.0 / np.sqrt(s * sp * (s + sp))[:, None]
    lam = C0 / freqs[None, :]
    return amp[:, None] * lam / (4 * np.pi) * spread * np.exp(-1j * k * total) * pol


# -- specular chains ------------------------------------------------------------------

def specular_gains(chain_pts, nref, dyadics, tx: Antenna, rx: Antenna, freqs) -> np.ndarray:
    """Complex gains (m, nf) from chain points and their transfer dyadics."""
    m = len(nref)
    if m == 0:
        return np.zeros((0, len(freqs)), dtype=complex)
    rows = np.arange(m)
    first = chain_pts[:, 1] - chain_pts[:, 0]
    last = chain_pts[rows, nref + 1] - chain_pts[rows, nref]
    seg = np.linalg.norm(np.diff(chain_pts, axis=1), axis=2)
    L = np.where(np.arange(seg.shape[1])[None, :] <= nref[:, None], seg, 0.0).sum(axis=1)
    d0 = first / np.linalg.norm(first, axis=1)[:, None]
    d1 = last / np.linalg.norm(last, axis=1)[:, None]
    p_tx = tx.polarizations(d0)
    p_rx = rx.polarizations(-d1)
    amp = np.sqrt(tx.gains(d0) * rx.gains(-d1))
    pol = np.einsum("ma,mfab,mb->mf", p_rx, dyadics, p_tx)
    k = 2.0 * np.pi * freqs[None, :] / C0
    lam = C0 / freqs[None, :]
    return amp[:, None] * lam / (4 * np.pi * L[:, None]) * np.exp(-1j * k * L[:, None]) * pol


def bundle_gains(bundle: PathBundle, arrays: SceneArrays, tx: Antenna, rx: Antenna, freqs) -> np.ndarray:
    """Gains (paths, nf) of a bundle, specular chains first then diffraction."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    dy = kernels.reflection_dyadics(np.ascontiguousarray(bundle.chain_pts), bundle.nref,
                                    np.ascontiguousarray(bundle.sids), arrays.n_boxes, arrays.kind,
                                    arrays.eps_r, arrays.sigma, arrays.dh, freqs)
    g_spec = specular_gains(bundle.chain_pts, bundle.nref, dy, tx, rx, freqs)
    g_diff = diffraction_gains(bundle.tx, bundle.rx, arrays.edges[bundle.edge_ids], bundle.diff_pts,
                               tx, rx, freqs)
    return np.concatenate([g_spec, g_diff], axis=0)


# -- object route ------------------------------------------------------------------

def _reflection_dyadic(inter, s_in, s_out, freq):
    n = inter.normal
    cos_t = min(float(-(s_in @ n)), 1.0)
    coeffs = effective_reflection(inter.material, float(np.arccos(cos_t)), freq)
    ep = np.cross(s_in, n)
    if np.linalg.norm(ep) < 1e-12:
        ep = np.roll(np.abs(n), 1)
    ep = ep / np.linalg.norm(ep)
    p_in = np.cross(ep, s_in)
    p_out = np.cross(ep, s_out)
    return coeffs.r_perp * np.outer(ep, ep) + coeffs.r_par * np.outer(p_out, p_in)


def path_complex_gain(path: PropagationPath, tx: Antenna, rx: Antenna, freq: float, scene=None) -> ComplexFieldGain:
    """Complex voltage transfer of one path at one frequency.

    Contributions in an antenna pattern null are zero.  ``scene`` is
    accepted for interface symmetry; materials travel with the path.
    """
    if freq <= 0:
        raise ValueError("frequency must be positive")
    pts = path.points
    if path.total_length <= 0:
        raise ValueError("zero-length path")
    dirs = np.diff(pts, axis=0)
    dirs = dirs / np.linalg.norm(dirs, axis=1)[:, None]
    d = path.diffraction
    if d is not None:
        row = np.concatenate([pts[1], d.normal, [0.0], d.face_normals[0], d.face_normals[1]])[None, :]
        g = diffraction_gains(pts[0], pts[-1], row, pts[1:2], tx, rx, np.array([freq]))[0, 0]
        return ComplexFieldGain(complex(g), path.total_length / C0)
    T = np.eye(3, dtype=complex)
    for i, inter in enumerate(path.interactions[1:-1]):
        if inter.kind is not Kind.REFLECTION:
            raise ValueError(f"unexpected interaction {inter.kind}")
        T = _reflection_dyadic(inter, dirs[i], dirs[i + 1], freq) @ T
    g = specular_gains(pts[None, :, :], np.array([len(pts) - 2]), T[None, None], tx, rx, np.array([freq]))
    return ComplexFieldGain(complex(g[0, 0]), path.total_length / C0)


def path_gains(paths: Sequence[PropagationPath], tx: Antenna, rx: Antenna, freqs) -> np.ndarray:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    out = np.zeros((len(paths), len(freqs)), dtype=complex)
    for i, p in enumerate(paths):
        for j, f in enumerate(freqs):
            out[i, j] = path_complex_gain(p, tx, rx, f).value
    return out


# -- power -----------------------------------------------------------------------------

def _to_dbm(tx_dbm: float, power_ratio: float) -> float:
    if power_ratio <= 0.0:
        return NO_SIGNAL_DBM
    return float(tx_dbm + 10.0 * np.log10(power_ratio))


def band_power_from_gains(gains: np.ndarray, weights: np.ndarray, tx_dbm: float) -> float:
    """Weighted mean over frequency of |sum over paths|^2, in dBm."""
    if gains.shape[0] == 0:
        return NO_SIGNAL_DBM
    p = np.abs(gains.sum(axis=0)) ** 2
    return _to_dbm(tx_dbm, float((weights * p).sum() / weights.sum()))


def coherent_receive_power(paths: Sequence[PropagationPath], tx: Antenna, rx: Antenna, freq: float) -> float:
    """Narrowband received power in dBm (``-inf`` when nothing arrives)."""
    if not paths:
        return NO_SIGNAL_DBM
    return band_power_from_gains(path_gains(paths, tx, rx, [freq]), np.ones(1), tx.tx_power_dbm)


def band_averaged_power(paths: Sequence[PropagationPath], tx: Antenna, rx: Antenna,
                        waveform: Waveform = Waveform()) -> float:
    if not paths:
        return NO_SIGNAL_DBM
    g = path_gains(paths, tx, rx, waveform.frequencies())
    return band_power_from_gains(g, waveform.weights(), tx.tx_power_dbm)


def path_loss(received_dbm: float, budget: LinkBudget = LinkBudget()) -> tuple[float, bool]:
    pl = budget.tx_power_dbm - received_dbm
    safe = pl <= budget.max_safe_path_loss_db and received_dbm >= budget.sensitivity_dbm
    return float(pl), bool(safe)
