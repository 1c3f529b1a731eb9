"""Radial solutions of -Laplace(u) = lam u^p: closed forms, shooting, singular profiles.

A profile is an immutable object exposing ``evaluate(r) -> (u, u', u'')`` on its
validity interval.  Shooting profiles store samples (r, u, u', u''_ode) and
interpolate with cubic Hermite splines: u from (u, u'), and u', u'' from
(u', u'') so the residual uses derivative data the ODE supplies directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .params import ProblemParams, RegimeError, critical_exponents


class SolverError(RuntimeError):
    """The shooting integrator did not reach the requested tolerance."""


class RadialProfile:
    """Base class; subclasses implement ``_eval``."""

    kind: str = "abstract"

    def __init__(self, d: int, params: Optional[ProblemParams], positivity_radius: float,
                 r_max: float, *, singular: bool = False, gamma: Optional[float] = None,
                 is_solution: bool = True, monotone: Optional[str] = "decreasing",
                 u0: Optional[float] = None, note: str = ""):
        self.d = int(d)
        self.params = params
        self.positivity_radius = float(positivity_radius)
        self.r_max = float(r_max)
        self.singular = singular
        self.gamma = gamma
        self.is_solution = is_solution
        self.monotone = monotone
        self.u0 = u0
        self.note = note

    # -- evaluation -------------------------------------------------------
    @property
    def breakpoints(self) -> tuple:
        """Radii where the representation is only piecewise smooth."""
        return ()

    @property
    def validity_radius(self) -> float:
        return min(self.positivity_radius, self.r_max)

    def _eval(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _guard(self, r: np.ndarray) -> None:
        if np.any(r < 0.0):
            raise RegimeError("negative radius")
        if self.singular and np.any(r == 0.0):
            raise RegimeError("singular profile evaluated at the origin")
        lim = self.validity_radius
        if np.any(r > lim * (1.0 + 1e-12)):
            raise RegimeError(f"radius beyond validity interval [0, {lim}]")

    def evaluate(self, r):
        r_arr = np.asarray(r, dtype=float)
        self._guard(r_arr)
        u, du, d2u = self._eval(np.atleast_1d(r_arr))
        if np.ndim(r) == 0:
            return float(u[0]), float(du[0]), float(d2u[0])
        return u, du, d2u

    def u(self, r):
        return self.evaluate(r)[0]

    def du(self, r):
        return self.evaluate(r)[1]

    def samples(self, n: int = 513) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lim = self.validity_radius
        lo = lim * 1e-3 if self.singular else 0.0
        r = np.linspace(lo, lim, n)
        u, du, _ = self.evaluate(r)
        return r, u, du

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "params": None if self.params is None else self.params.as_dict(),
            "u0": self.u0,
            "positivity_radius": self.positivity_radius if math.isfinite(self.positivity_radius) else None,
            "r_max": self.r_max if math.isfinite(self.r_max) else None,
            "singular": self.singular,
            "is_solution": self.is_solution,
            "note": self.note,
        }


def _lam_up(params: ProblemParams, u: np.ndarray) -> np.ndarray:
    return params.lam * np.power(np.maximum(u, 0.0), params.p)


def residual(profile: RadialProfile, r_grid, relative: bool = False) -> float:
    """sup over the grid of |u'' + (d-1)u'/r + lam u^p|; u'/r -> u''(0) at the origin.

    ``relative`` divides each point by the largest of the three terms, which is the
    meaningful scale for profiles that blow up at the origin.
    """
    if profile.params is None:
        raise RegimeError("residual needs the equation parameters of the profile")
    r = np.asarray(r_grid, dtype=float)
    u, du, d2u = profile.evaluate(r)
    u, du, d2u = np.atleast_1d(u), np.atleast_1d(du), np.atleast_1d(d2u)
    r = np.atleast_1d(r)
    drift = np.where(r > 0.0, du / np.where(r > 0.0, r, 1.0), d2u)
    src = _lam_up(profile.params, u)
    res = np.abs(d2u + (profile.d - 1) * drift + src)
    if relative:
        scale = np.maximum.reduce([np.abs(d2u), np.abs((profile.d - 1) * drift), src])
        res = res / np.where(scale > 0.0, scale, 1.0)
    return float(np.max(res))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


class QuadraticProfile(RadialProfile):
    """u = u0 - lam r^2/(2d), the p = 0 solution."""

    kind = "closed-p0"

    def __init__(self, params: ProblemParams, u0: float):
        if params.p != 0.0:
            raise RegimeError("quadratic closed form needs p = 0")
        if not u0 > 0.0:
            raise RegimeError("center value must be positive")
        rp = math.sqrt(2.0 * params.d * u0 / params.lam)
        super().__init__(params.d, params, rp, rp, u0=u0)

    def _eval(self, r):
        lam, d = self.params.lam, self.d
        return self.u0 - lam * r**2 / (2.0 * d), -lam * r / d, np.full_like(r, -lam / d)


class SincProfile(RadialProfile):
    """u = u0 sin(k r)/(k r), k = sqrt(lam): the p = 1 solution in d = 3."""

    kind = "closed-p1-d3"

    def __init__(self, lam: float, u0: float):
        params = ProblemParams(3, 1.0, lam)
        if not u0 > 0.0:
            raise RegimeError("center value must be positive")
        rp = math.pi / math.sqrt(lam)
        super().__init__(3, params, rp, rp, u0=u0)

    def _eval(self, r):
        k = math.sqrt(self.params.lam)
        x = k * r
        small = x < 1e-2
        xs = np.where(small, 1.0, x)
        f = np.where(small, 1.0 - x**2 / 6.0 + x**4 / 120.0, np.sin(xs) / xs)
        fp = np.where(small, -x / 3.0 + x**3 / 30.0 - x**5 / 840.0,
                      (xs * np.cos(xs) - np.sin(xs)) / xs**2)
        fpp = np.where(small, -1.0 / 3.0 + x**2 / 10.0 - x**4 / 168.0, -2.0 * fp / xs - f)
        return self.u0 * f, self.u0 * k * fp, self.u0 * k * k * fpp


def explicit_p0(params: ProblemParams, u0: float) -> QuadraticProfile:
    return QuadraticProfile(params, u0)


def explicit_linear_d3(lam: float, u0: float) -> SincProfile:
    return SincProfile(lam, u0)


class SingularProfile(RadialProfile):
    """u = A r^(-gamma), gamma = 2/(p-1), A = [gamma(d-2-gamma)/lam]^(1/(p-1))."""

    kind = "singular"

    def __init__(self, params: ProblemParams, r_max: float = 1.0):
        ex = critical_exponents(params.d)
        if not ex.p_c < params.p < ex.p_s:
            raise RegimeError(f"singular profile needs p_c={ex.p_c} < p < p_s={ex.p_s}, got p={params.p}")
        gamma = 2.0 / (params.p - 1.0)
        self.amplitude = (gamma * (params.d - 2.0 - gamma) / params.lam) ** (1.0 / (params.p - 1.0))
        super().__init__(params.d, params, math.inf, r_max, singular=True, gamma=gamma)

    def _eval(self, r):
        a, g = self.amplitude, self.gamma
        u = a * r**-g
        return u, -g * u / r, g * (g + 1.0) * u / r**2


def singular_profile(params: ProblemParams, r_max: float = 1.0) -> SingularProfile:
    return SingularProfile(params, r_max)


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------


class ShootingProfile(RadialProfile):
    kind = "shooting"

    def __init__(self, params: ProblemParams, u0: float, r: np.ndarray, u: np.ndarray,
                 du: np.ndarray, d2u: np.ndarray, positivity_radius: float, r_max: float,
                 tol: float, note: str = ""):
        super().__init__(params.d, params, positivity_radius, r_max, u0=u0, note=note)
        self.tol = tol
        self.r_nodes = r
        self.u_nodes = u
        self.du_nodes = du
        self.d2u_nodes = d2u
        self._U = CubicHermiteSpline(r, u, du)
        self._V = CubicHermiteSpline(r, du, d2u)
        self._V1 = self._V.derivative()

    @property
    def breakpoints(self):
        return self.r_nodes

    def _eval(self, r):
        return self._U(r), self._V(r), self._V1(r)

    def samples(self, n: Optional[int] = None):
        if n is None:
            return self.r_nodes.copy(), self.u_nodes.copy(), self.du_nodes.copy()
        return super().samples(n)


def length_scale(params: ProblemParams, u0: float) -> float:
    return (params.lam * u0 ** (params.p - 1.0)) ** -0.5


def solve_lane_emden(params: ProblemParams, u0: float, r_max: Optional[float] = None,
                     tol: float = 1e-10, n_samples: int = 4001,
                     max_steps: int = 200_000) -> ShootingProfile:
    """Shoot from the origin with u(0) = u0, u'(0) = 0 until r_max or the first zero of u."""
    if not u0 > 0.0 or not math.isfinite(u0):
        raise RegimeError("center value must be positive")
    d, p, lam = params.d, params.p, params.lam
    ell = length_scale(params, u0)
    r_start = 1e-3 * ell
    if r_max is not None:
        cap = r_max
    elif p >= critical_exponents(d).p_s:
        cap = 10.0 * ell  # entire solutions never reach zero
    else:
        cap = 1e4 * ell
    if not cap > r_start:
        raise RegimeError("r_max must exceed the series start radius")

    # u = u0 + a r^2 + b r^4 near the origin
    a = -lam * u0**p / (2.0 * d)
    b = lam**2 * p * u0 ** (2.0 * p - 1.0) / (8.0 * d * (d + 2.0))

    def series(r):
        return u0 + a * r**2 + b * r**4, 2 * a * r + 4 * b * r**3, 2 * a + 12 * b * r**2

    def rhs(r, y):
        return [y[1], -(d - 1) * y[1] / r - lam * max(y[0], 0.0) ** p]

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    y0 = list(series(r_start)[:2])
    first_step = min(1e-2 * ell, (cap - r_start) / 2.0)
    sol = solve_ivp(rhs, (r_start, cap), y0, method="DOP853", rtol=tol, atol=tol * u0,
                    dense_output=True, events=hit_zero, first_step=first_step,
                    max_step=max(cap - r_start, ell) / 20.0)
    if sol.status == -1:
        raise SolverError(f"integration failed: {sol.message}")
    if sol.nfev > 12 * max_steps:
        raise SolverError("step budget exhausted")
    if sol.t_events[0].size:
        r_end = float(sol.t_events[0][0])
        rp = r_end
        note = "truncated at the first zero of u" if r_max is not None else ""
    else:
        r_end = float(sol.t[-1])
        rp = math.inf
        note = ""
    n = max(n_samples, int(math.ceil(400.0 * r_end / ell)) + 1)
    grid = np.linspace(0.0, r_end, n)
    u = np.empty_like(grid)
    du = np.empty_like(grid)
    in_series = grid <= r_start
    su, sdu, _ = series(grid[in_series])
    u[in_series], du[in_series] = su, sdu
    dense = sol.sol(grid[~in_series])
    u[~in_series], du[~in_series] = dense[0], dense[1]
    if rp < math.inf:
        u[-1] = 0.0
    d2u = np.empty_like(grid)
    d2u[0] = -lam * u0**p / d
    d2u[1:] = -(d - 1) * du[1:] / grid[1:] - lam * np.maximum(u[1:], 0.0) ** p
    return ShootingProfile(params, u0, grid, u, du, d2u, rp, r_end, tol, note)


# ---------------------------------------------------------------------------
# Stubs and transformations
# ---------------------------------------------------------------------------


class ConstantProfile(RadialProfile):
    """u = c.  Not a solution of the equation; used for norm and guard tests."""

    kind = "constant-stub"

    def __init__(self, d: int, c: float, r_max: float = 1.0, params: Optional[ProblemParams] = None):
        super().__init__(d, params, math.inf, r_max, is_solution=False, monotone="decreasing", u0=c)
        self.c = c

    def _eval(self, r):
        return np.full_like(r, self.c), np.zeros_like(r), np.zeros_like(r)


class PowerProfile(RadialProfile):
    """u = r^k (increasing).  Not a solution; used for norm tests."""

    kind = "power-stub"

    def __init__(self, d: int, k: float, r_max: float = 1.0):
        super().__init__(d, None, math.inf, r_max, is_solution=False, monotone="increasing")
        self.k = k

    def _eval(self, r):
        k = self.k
        return r**k, k * r ** (k - 1.0), k * (k - 1.0) * r ** (k - 2.0)


class TransformedProfile(RadialProfile):
    """amp * base(mu * r).  amp = mu^(2/(p-1)) with lam fixed gives another solution."""

    def __init__(self, base: RadialProfile, amp: float = 1.0, mu: float = 1.0,
                 is_solution: Optional[bool] = None):
        if not (amp > 0.0 and mu > 0.0):
            raise RegimeError("amplitude and scale must be positive")
        super().__init__(base.d, base.params, base.positivity_radius / mu, base.r_max / mu,
                         singular=base.singular, gamma=base.gamma,
                         is_solution=base.is_solution if is_solution is None else is_solution,
                         monotone=base.monotone,
                         u0=None if base.u0 is None else amp * base.u0)
        self.base, self.amp, self.mu = base, amp, mu
        self.kind = base.kind + ("-perturbed" if is_solution is False else "-scaled")

    @property
    def breakpoints(self):
        return np.asarray(self.base.breakpoints, dtype=float) / self.mu

    def _eval(self, r):
        u, du, d2u = self.base._eval(self.mu * r)
        return self.amp * u, self.amp * self.mu * du, self.amp * self.mu**2 * d2u


def perturbed(profile: RadialProfile, factor: float) -> TransformedProfile:
    """Multiply u (and its derivatives) by ``1 + factor``; not a solution unless p = 1."""
    return TransformedProfile(profile, amp=1.0 + factor, is_solution=False)


def rescaled(profile: RadialProfile, mu: float) -> TransformedProfile:
    """mu^(2/(p-1)) u(mu r): again a solution for p > 1 with the same lam."""
    if profile.params is None or not profile.params.p > 1.0:
        raise RegimeError("the scaling family needs p > 1")
    return TransformedProfile(profile, amp=mu ** (2.0 / (profile.params.p - 1.0)), mu=mu)


def build_profile(params: ProblemParams, u0: float = 1.0, kind: str = "auto",
                  r_max: Optional[float] = None, tol: float = 1e-10) -> RadialProfile:
    """Closed form when one exists, else shooting.  ``kind`` forces a choice."""
    if kind == "singular":
        return SingularProfile(params, 1.0 if r_max is None else r_max)
    if kind in ("auto", "closed"):
        if params.p == 0.0:
            return QuadraticProfile(params, u0)
        if params.p == 1.0 and params.d == 3:
            return SincProfile(params.lam, u0)
        if kind == "closed":
            raise RegimeError("no closed form for these parameters")
    if kind not in ("auto", "shooting", "closed"):
        raise ValueError(f"unknown profile kind {kind!r}")
    return solve_lane_emden(params, u0, r_max, tol)
