"""Elastic stress models and plastic return mappings.

Reference implementations in plain NumPy, one particle at a time. The
simulation kernels inline the same math; tests pin the two against each
other. All return mappings are idempotent: feeding a projected F back in
returns it unchanged (to rounding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Hardening coefficient and residual strength ratio for the softening
# (damage) variant of the von Mises mapping.
SOFTENING_H = 5.0
SOFTENING_R_MIN = 0.1

# Singular values of F are kept inside this band to stop inverted or
# exploded elements from destabilizing the stress evaluation.
SV_CLAMP_LO = 0.05
SV_CLAMP_HI = 4.0


@dataclass(frozen=True)
class LameParams:
    mu: float
    lam: float


def lame_from_moduli(E: float, nu: float) -> LameParams:
    """Lame coefficients from Young's modulus and Poisson's ratio."""
    if not E > 0:
        raise ValueError(f"E must be > 0, got {E!r}")
    if not (0.0 <= nu < 0.5):
        raise ValueError(f"nu must be in [0, 0.5), got {nu!r}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return LameParams(mu=mu, lam=lam)


@dataclass
class PlasticState:
    """Mutable per-particle plasticity bookkeeping.

    eps_p: accumulated equivalent plastic strain.
    sigma_y_cur: current yield stress after softening; equals the initial
    yield stress until plastic flow starts. Unused slots stay at defaults.
    """

    eps_p: float = 0.0
    sigma_y_cur: float = 0.0


# --- elasticity -----------------------------------------------------------

def stress_neo_hookean_pk1(F: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """First Piola-Kirchhoff stress, compressible neo-Hookean."""
    F = np.asarray(F, dtype=float)
    Finv_T = np.linalg.inv(F).T
    J = np.linalg.det(F)
    return mu * (F - Finv_T) + lam * math.log(J) * Finv_T


def stress_stvk_pk1(F: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """First Piola-Kirchhoff stress, Saint Venant-Kirchhoff."""
    F = np.asarray(F, dtype=float)
    G = 0.5 * (F.T @ F - np.eye(3))
    S = 2.0 * mu * G + lam * np.trace(G) * np.eye(3)
    return F @ S


def kirchhoff_neo_hookean(F: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Kirchhoff stress tau = P F^T, neo-Hookean closed form."""
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    return mu * (F @ F.T - np.eye(3)) + lam * math.log(J) * np.eye(3)


def kirchhoff_stvk(F: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Kirchhoff stress tau = P F^T, StVK."""
    return stress_stvk_pk1(F, mu, lam) @ np.asarray(F, dtype=float).T


def energy_neo_hookean(F: np.ndarray, mu: float, lam: float) -> float:
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    logJ = math.log(J)
    return 0.5 * mu * (np.trace(F.T @ F) - 3.0) - mu * logJ + 0.5 * lam * logJ * logJ


def energy_stvk(F: np.ndarray, mu: float, lam: float) -> float:
    F = np.asarray(F, dtype=float)
    G = 0.5 * (F.T @ F - np.eye(3))
    return mu * float(np.sum(G * G)) + 0.5 * lam * float(np.trace(G)) ** 2


# --- plasticity -----------------------------------------------------------

def _hencky(F: np.ndarray):
    U, sig, Vt = np.linalg.svd(np.asarray(F, dtype=float))
    eps = np.log(sig)
    return U, sig, Vt, eps


def _reassemble(U: np.ndarray, eps: np.ndarray, Vt: np.ndarray) -> np.ndarray:
    return (U * np.exp(eps)) @ Vt


def von_mises_radius(sigma_y: float, mu: float) -> float:
    """Yield surface radius in principal deviatoric Hencky strain."""
    return math.sqrt(2.0 / 3.0) * sigma_y / (2.0 * mu)


def return_map_identity(F: np.ndarray) -> np.ndarray:
    """Pure elastic: the trial state is the final state."""
    return np.asarray(F, dtype=float)


def return_map_von_mises(F: np.ndarray, mu: float, sigma_y: float) -> np.ndarray:
    """Project the trial strain onto a fixed von Mises yield surface.

    Operates on principal Hencky strain; plastic flow is purely
    deviatoric so volume is untouched.
    """
    U, _, Vt, eps = _hencky(F)
    dev = eps - eps.mean()
    dev_norm = float(np.linalg.norm(dev))
    radius = von_mises_radius(sigma_y, mu)
    if dev_norm <= radius:
        return np.asarray(F, dtype=float)
    eps_new = eps - (dev_norm - radius) * dev / dev_norm
    return _reassemble(U, eps_new, Vt)


def softened_yield_stress(sigma_y0: float, eps_p: float, h: float = SOFTENING_H, r_min: float = SOFTENING_R_MIN) -> float:
    """Linear softening with a residual floor."""
    return sigma_y0 * max(1.0 - h * eps_p, r_min)


def return_map_von_mises_softening(
    F: np.ndarray,
    mu: float,
    eps_p: float,
    sigma_y_cur: float,
    sigma_y0: float,
    h: float = SOFTENING_H,
    r_min: float = SOFTENING_R_MIN,
):
    """Von Mises projection with yield stress that decays as plastic
    strain accumulates (damage).

    The plastic increment is solved consistently: the projected strain
    lands exactly on the yield surface evaluated at the updated (softer)
    yield stress, so re-applying the mapping is a no-op. With the
    softening law s(e) = sigma_y0 * max(1 - h e, r_min) and radius
    t(s) = sqrt(2/3) s / (2 mu), the linear-regime solve is

        dg = (|dev| - t(sigma_y_cur)) / (1 - K),  K = h sigma_y0 / (3 mu)

    falling back to projection onto the residual surface when the floor
    is reached or K >= 1.

    Returns (F_new, eps_p_new, sigma_y_new).
    """
    U, _, Vt, eps = _hencky(F)
    dev = eps - eps.mean()
    dev_norm = float(np.linalg.norm(dev))
    t_cur = von_mises_radius(sigma_y_cur, mu)
    if dev_norm <= t_cur:
        return np.asarray(F, dtype=float), eps_p, sigma_y_cur

    c = math.sqrt(2.0 / 3.0)
    t_floor = von_mises_radius(sigma_y0 * r_min, mu)
    K = h * sigma_y0 / (3.0 * mu)
    dg = None
    if K < 1.0:
        dg_lin = (dev_norm - t_cur) / (1.0 - K)
        if 1.0 - h * (eps_p + c * dg_lin) >= r_min:
            dg = dg_lin
    if dg is None:
        # floor regime: fixed residual surface
        dg = dev_norm - t_floor
    eps_p_new = eps_p + c * dg
    sigma_y_new = min(sigma_y_cur, softened_yield_stress(sigma_y0, eps_p_new, h, r_min))
    eps_new = eps - dg * dev / dev_norm
    return _reassemble(U, eps_new, Vt), eps_p_new, sigma_y_new


def drucker_prager_alpha(phi: float) -> float:
    """Friction coefficient of the cone from the friction angle."""
    s = math.sin(phi)
    return math.sqrt(2.0 / 3.0) * 2.0 * s / (3.0 - s)


def return_map_drucker_prager(F: np.ndarray, mu: float, lam: float, phi: float) -> np.ndarray:
    """Project the trial strain onto the Drucker-Prager cone.

    Volume expansion (tr eps > 0) projects to the apex: the material
    offers no resistance to separation. Otherwise the cone condition is
    checked in principal Hencky strain and violated states slide down
    the deviatoric direction.
    """
    U, _, Vt, eps = _hencky(F)
    tr = float(eps.sum())
    if tr > 0.0:
        return _reassemble(U, np.zeros(3), Vt)
    dev = eps - tr / 3.0
    dev_norm = float(np.linalg.norm(dev))
    alpha = drucker_prager_alpha(phi)
    dg = dev_norm + alpha * (3.0 * lam + 2.0 * mu) / (2.0 * mu) * tr
    if dg <= 0.0 or dev_norm <= 0.0:
        return np.asarray(F, dtype=float)
    eps_new = eps - dg * dev / dev_norm
    return _reassemble(U, eps_new, Vt)


def clamp_singular_values(F: np.ndarray, lo: float = SV_CLAMP_LO, hi: float = SV_CLAMP_HI):
    """Clamp singular values of F into [lo, hi].

    Returns (F_clamped, was_clamped). No-op (and exactly F) when all
    singular values already sit inside the band.
    """
    U, sig, Vt = np.linalg.svd(np.asarray(F, dtype=float))
    if np.all((sig >= lo) & (sig <= hi)):
        return np.asarray(F, dtype=float), False
    sig = np.clip(sig, lo, hi)
    return (U * sig) @ Vt, True
