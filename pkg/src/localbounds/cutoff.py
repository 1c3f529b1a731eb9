"""Radial piecewise-quadratic cutoff: 1 on B_R1, 0 outside B_R0, C^1 across the knots."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import RegimeError, log_ball_volume


@dataclass(frozen=True)
class CutoffProfile:
    r1: float
    r0: float

    def __post_init__(self) -> None:
        if not (0.0 < self.r1 < self.r0) or not math.isfinite(self.r0):
            raise RegimeError(f"cutoff needs 0 < R1 < R0, got R1={self.r1}, R0={self.r0}")

    @property
    def gap(self) -> float:
        return self.r0 - self.r1

    @property
    def mid(self) -> float:
        return 0.5 * (self.r0 + self.r1)

    @property
    def knots(self) -> tuple[float, float, float]:
        return self.r1, self.mid, self.r0


def cutoff_eval(profile: CutoffProfile, r, d: int = 3):
    """(phi, phi', Laplacian phi) at radius r (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        raise RegimeError("cutoff evaluated at negative radius")
    g2 = profile.gap**2
    inner = (r_arr > profile.r1) & (r_arr <= profile.mid)
    outer = (r_arr > profile.mid) & (r_arr <= profile.r0)
    phi = np.where(r_arr <= profile.r1, 1.0, 0.0)
    dphi = np.zeros_like(r_arr)
    d2phi = np.zeros_like(r_arr)
    t_in = r_arr - profile.r1
    t_out = profile.r0 - r_arr
    phi = np.where(inner, 1.0 - 2.0 * t_in**2 / g2, phi)
    phi = np.where(outer, 2.0 * t_out**2 / g2, phi)
    dphi = np.where(inner, -4.0 * t_in / g2, dphi)
    dphi = np.where(outer, -4.0 * t_out / g2, dphi)
    d2phi = np.where(inner, -4.0 / g2, d2phi)
    d2phi = np.where(outer, 4.0 / g2, d2phi)
    safe_r = np.where(r_arr > 0.0, r_arr, 1.0)
    lap = d2phi + (d - 1) * dphi / safe_r
    if np.ndim(r) == 0:
        return float(phi), float(dphi), float(lap)
    return phi, dphi, lap


def grad_sq_over_phi(profile: CutoffProfile, r):
    """|grad phi|^2 / phi, closed form on each piece (the outer piece is constant 8/(R0-R1)^2)."""
    r_arr = np.asarray(r, dtype=float)
    g2 = profile.gap**2
    t_in = r_arr - profile.r1
    inner = (r_arr > profile.r1) & (r_arr <= profile.mid)
    outer = (r_arr > profile.mid) & (r_arr < profile.r0)
    out = np.zeros_like(r_arr)
    out = np.where(inner, 16.0 * t_in**2 / g2**2 / (1.0 - 2.0 * t_in**2 / g2), out)
    out = np.where(outer, 8.0 / g2, out)
    return out


@dataclass(frozen=True)
class CutoffBounds:
    sup_grad: float
    sup_lap: float
    certified: bool


def cutoff_bounds(profile: CutoffProfile, d: int) -> CutoffBounds:
    """Exact suprema of |phi'| and |Laplacian phi| from the piecewise formulas."""
    g = profile.gap
    m = profile.mid
    sup_grad = 2.0 / g
    # |Lap| grows on the inner piece up to the midpoint; on the outer piece it is
    # monotone between its two endpoint values.
    inner_mid = 4.0 / g**2 + 2.0 * (d - 1) / (m * g)
    outer_mid = abs(4.0 / g**2 - 2.0 * (d - 1) / (m * g))
    outer_end = 4.0 / g**2
    sup_lap = max(inner_mid, outer_mid, outer_end)
    certified = sup_grad <= 4.0 / g and sup_lap <= 4.0 * d / g**2
    return CutoffBounds(sup_grad, sup_lap, certified)


def cutoff_energy_bound(profile: CutoffProfile, d: int) -> float:
    """8 omega_d R0^d / (R0-R1)^2."""
    return 8.0 * math.exp(log_ball_volume(d)) * profile.r0**d / profile.gap**2
