"""Radial quadrature on balls: L^q norms, means, extrema, energy integrals, divergence probes.

Integrals over B_R of radial functions reduce to s_d * int_0^R f(r) r^(d-1) dr with
s_d = d * omega_d.  The 1D integrals use an adaptive composite Gauss-Legendre rule
with breakpoints at the knots of the integrand.  Power integrals are evaluated in
log space, so u^q with q in the thousands (late Moser steps) stays representable.
Singular profiles are integrated in s = log r with an analytic power-law tail at
the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .cutoff import CutoffProfile, cutoff_eval
from .params import RegimeError, log_ball_volume
from .radial import RadialProfile

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
DEFAULT_RTOL = 1e-12
SINGULAR_EPS = 1e-10


@dataclass(frozen=True)
class Quad:
    value: float
    abs_error: float
    level: int


def _rule(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray) -> np.ndarray:
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    return (f(x) * _GL_W).sum(axis=1) * half


def adaptive_integrate(f: Callable[[np.ndarray], np.ndarray], knots: Sequence[float],
                       rtol: float = DEFAULT_RTOL, atol: float = 0.0,
                       max_level: int = 48, max_panels: int = 200_000) -> Quad:
    """Integrate a vectorised f over [knots[0], knots[-1]] by panel bisection.

    A panel is accepted when its coarse and bisected estimates agree to within its
    length-weighted share of max(atol, rtol * |running total|).
    """
    k = np.unique(np.asarray(knots, dtype=float))
    if k.size < 2:
        return Quad(0.0, 0.0, 0)
    a, b = k[:-1], k[1:]
    span = k[-1] - k[0]
    coarse = _rule(f, a, b)
    vals: list[float] = []
    errs: list[float] = []
    level = 0
    while a.size:
        m = 0.5 * (a + b)
        left = _rule(f, a, m)
        right = _rule(f, m, b)
        fine = left + right
        err = np.abs(fine - coarse)
        scale = abs(math.fsum(vals) + float(np.sum(fine)))
        tol = max(atol, rtol * scale) * (b - a) / span
        ok = (err <= tol) | (level >= max_level) | ~np.isfinite(fine)
        if 2 * np.count_nonzero(~ok) > max_panels:
            # budget exhausted: keep the current estimates, their error bars say how good they are
            ok[:] = True
        vals.extend(fine[ok].tolist())
        errs.extend(err[ok].tolist())
        keep = ~ok
        a, b, m = a[keep], b[keep], m[keep]
        coarse = np.concatenate([left[keep], right[keep]])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        level += 1
    return Quad(math.fsum(vals), math.fsum(errs), level)


def log_adaptive_integrate(logf: Callable[[np.ndarray], np.ndarray], knots: Sequence[float],
                           rtol: float = DEFAULT_RTOL) -> tuple[float, float, int]:
    """log of int exp(logf); returns (log value, relative error, level)."""
    k = np.unique(np.asarray(knots, dtype=float))
    sub = 33 if k.size < 64 else 2
    fine_knots = np.unique(np.concatenate([np.linspace(a, b, sub) for a, b in zip(k[:-1], k[1:])]))
    x = (0.5 * (fine_knots[:-1] + fine_knots[1:]))[:, None] + \
        (0.5 * np.diff(fine_knots))[:, None] * _GL_X[None, :]
    shift = float(np.max(logf(x)))
    if not math.isfinite(shift):
        raise RegimeError("integrand is not finite on the sample grid")
    q = adaptive_integrate(lambda t: np.exp(logf(t) - shift), fine_knots, rtol=rtol)
    if not q.value > 0.0:
        return -math.inf, math.inf, q.level
    return shift + math.log(q.value), q.abs_error / q.value, q.level


def surface_factor(d: int) -> float:
    return d * math.exp(log_ball_volume(d))


def ball_measure(d: int, R: float) -> float:
    return math.exp(log_ball_volume(d) + d * math.log(R))


def _check_radius(profile: RadialProfile, R: float) -> None:
    if not R > 0.0:
        raise RegimeError("ball radius must be positive")
    if R > profile.validity_radius * (1.0 + 1e-12):
        raise RegimeError(f"R={R} beyond the profile's validity radius {profile.validity_radius}")


def _profile_knots(profile: RadialProfile, R: float, extra: Sequence[float] = ()) -> list[float]:
    # interpolated profiles are piecewise polynomial: panels must not straddle their nodes
    pts = [0.0, R] + [x for x in extra if 0.0 < x < R]
    pts += [float(x) for x in profile.breakpoints if 0.0 < x < R]
    return sorted(set(pts))


# ---------------------------------------------------------------------------
# Generic ball integrals
# ---------------------------------------------------------------------------

Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def ball_integral(profile: RadialProfile, fn: Integrand, R: float, extra_knots: Sequence[float] = (),
                  rtol: float = DEFAULT_RTOL) -> Quad:
    """s_d * int_0^R fn(r, u, u') r^(d-1) dr."""
    _check_radius(profile, R)
    d = profile.d
    sd = surface_factor(d)
    if not profile.singular:
        def g(r):
            u, du, _ = profile.evaluate(r)
            return fn(r, u, du) * r ** (d - 1)

        q = adaptive_integrate(g, _profile_knots(profile, R, extra_knots), rtol=rtol)
        return Quad(sd * q.value, sd * q.abs_error, q.level)

    eps = SINGULAR_EPS * R

    def h(s):
        r = np.exp(s)
        u, du, _ = profile.evaluate(r)
        return fn(r, u, du) * r**d

    knots = [math.log(eps), math.log(R)] + [math.log(x) for x in extra_knots if eps < x < R]
    q = adaptive_integrate(h, sorted(knots), rtol=rtol)
    tail, tail_err = _power_tail(profile, fn, eps)
    return Quad(sd * (q.value + tail), sd * (q.abs_error + tail_err), q.level)


def _power_tail(profile: RadialProfile, fn: Integrand, eps: float) -> tuple[float, float]:
    """int_0^eps of F(r) = fn r^(d-1), assuming a power law below eps."""
    r = np.array([eps, 2.0 * eps])
    u, du, _ = profile.evaluate(r)
    F = fn(r, u, du) * r ** (profile.d - 1)
    if F[0] == 0.0:
        return 0.0, 0.0
    slope = math.log(abs(F[1] / F[0])) / math.log(2.0)
    if slope <= -1.0:
        return math.inf, math.inf
    tail = float(F[0]) * eps / (slope + 1.0)
    return tail, abs(tail) * 1e-6


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormValue:
    value: float
    abs_error: float
    refinement_level: int
    divergent: bool = False
    log_integral: Optional[float] = None

    @property
    def rel_error(self) -> float:
        if self.divergent or self.value == 0.0:
            return math.inf if self.divergent else 0.0
        return self.abs_error / abs(self.value)


def log_power_integral(profile: RadialProfile, q: float, R: float, delta: float = 0.0,
                       rtol: float = DEFAULT_RTOL) -> tuple[float, float, int]:
    """log of int_{B_R} (u+delta)^q; +inf when the integral diverges at a singular origin."""
    _check_radius(profile, R)
    d = profile.d
    if q < 0.0 and delta == 0.0 and R >= profile.positivity_radius * (1.0 - 1e-12):
        raise RegimeError("negative exponent with u touching zero on the ball")
    log_sd = math.log(surface_factor(d))
    if not profile.singular:
        def logf(r):
            u, _, _ = profile.evaluate(r)
            with np.errstate(divide="ignore"):
                return q * np.log(u + delta) + (d - 1) * np.log(np.maximum(r, 1e-300))

        lv, rel, lvl = log_adaptive_integrate(logf, _profile_knots(profile, R), rtol=rtol)
        return log_sd + lv, rel, lvl
    # singular: u + delta ~ A r^-gamma near the origin
    expo = d - profile.gamma * q
    if expo <= 1e-12 * d:
        return math.inf, math.inf, 0
    eps = SINGULAR_EPS * R

    def logh(s):
        r = np.exp(s)
        u, _, _ = profile.evaluate(r)
        return q * np.log(u + delta) + d * s

    lv, rel, lvl = log_adaptive_integrate(logh, [math.log(eps), math.log(R)], rtol=rtol)
    u_eps = profile.u(eps)
    log_tail = q * math.log(u_eps + delta) + d * math.log(eps) - math.log(expo)
    total = np.logaddexp(lv, log_tail)
    return log_sd + float(total), rel, lvl


def lq_norm(profile: RadialProfile, q: float, R: float, delta: float = 0.0,
            rtol: float = DEFAULT_RTOL) -> NormValue:
    """(int_{B_R} (u+delta)^q)^(1/q) for any real q != 0.

    For q < 0 this is the convention ||u||_{-|q|} = (int u^-|q|)^(-1/|q|).
    """
    if q == 0.0:
        raise RegimeError("q = 0 is not a norm exponent")
    lv, rel, lvl = log_power_integral(profile, q, R, delta, rtol)
    if math.isinf(lv):
        return NormValue(math.inf, math.inf, lvl, divergent=True, log_integral=lv)
    value = math.exp(lv / q)
    return NormValue(value, value * (math.expm1(rel / abs(q)) if rel < 1 else rel), lvl,
                     log_integral=lv)


def mean_integral(profile: RadialProfile, q: float, R: float, delta: float = 0.0,
                  rtol: float = DEFAULT_RTOL) -> NormValue:
    """Mean of (u+delta)^q over B_R."""
    if q == 0.0:
        raise RegimeError("q = 0 is rejected for mean integrals")
    lv, rel, lvl = log_power_integral(profile, q, R, delta, rtol)
    if math.isinf(lv):
        return NormValue(math.inf, math.inf, lvl, divergent=True, log_integral=lv)
    lm = lv - math.log(ball_measure(profile.d, R))
    value = math.exp(lm) if lm < 709.0 else math.inf
    return NormValue(value, value * rel, lvl, log_integral=lm)


def generalized_mean(profile: RadialProfile, q: float, R: float, delta: float = 0.0) -> NormValue:
    """(mean of u^q over B_R)^(1/q)."""
    m = mean_integral(profile, q, R, delta)
    if m.divergent:
        return m
    value = math.exp(m.log_integral / q)
    return NormValue(value, value * m.rel_error / abs(q), m.refinement_level)


# ---------------------------------------------------------------------------
# Extrema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupInf:
    sup: float
    inf: float
    sup_grad: float
    sup_divergent: bool = False


def sup_inf(profile: RadialProfile, R: float) -> SupInf:
    """(sup u, inf u, sup |u'|) over the closed ball B_R."""
    _check_radius(profile, R)
    if profile.singular:
        return SupInf(math.inf, profile.u(R), math.inf, sup_divergent=True)
    if profile.monotone == "decreasing":
        sup, inf = profile.u(0.0), profile.u(R)
    elif profile.monotone == "increasing":
        sup, inf = profile.u(R), profile.u(0.0)
    else:
        r = np.linspace(0.0, R, 4001)
        u = profile.u(r)
        sup, inf = float(np.max(u)), float(np.min(u))
    return SupInf(sup, inf, _sup_abs_derivative(profile, R))


def _sup_abs_derivative(profile: RadialProfile, R: float) -> float:
    r = np.linspace(0.0, R, 4001)
    g = np.abs(profile.du(r))
    i = int(np.argmax(g))
    best = float(g[i])
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -abs(profile.du(float(x))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-14 * max(R, 1.0)})
        best = max(best, -float(res.fun))
    return best


# ---------------------------------------------------------------------------
# Energy identity and logarithmic gradients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergySides:
    lhs: float
    rhs: float
    residual: float
    abs_error: float


def energy_identity_sides(profile: RadialProfile, cutoff: CutoffProfile, alpha: float,
                          delta: float) -> EnergySides:
    """Both sides of the local energy identity tested with the cutoff phi.

    lhs = 4 alpha int |grad (u+delta)^((alpha+1)/2)|^2 phi
    rhs = lam (alpha+1)^2 int u^p (u+delta)^alpha phi + (alpha+1) int (u+delta)^(alpha+1) Lap phi
    """
    if alpha == -1.0:
        raise RegimeError("alpha = -1 is excluded")
    if delta < 0.0 or (delta == 0.0 and not alpha > -1.0):
        raise RegimeError("delta = 0 is allowed only for alpha > -1")
    if profile.params is None:
        raise RegimeError("energy identity needs the equation parameters")
    if cutoff.r0 > profile.validity_radius * (1.0 + 1e-12):
        raise RegimeError("cutoff support beyond the profile's domain")
    d, lam, p = profile.d, profile.params.lam, profile.params.p
    knots = list(cutoff.knots)

    def lhs_fn(r, u, du):
        phi = cutoff_eval(cutoff, r, d)[0]
        return alpha * (alpha + 1.0) ** 2 * (u + delta) ** (alpha - 1.0) * du**2 * phi

    def rhs_fn(r, u, du):
        phi, _, lap = cutoff_eval(cutoff, r, d)
        up = np.power(np.maximum(u, 0.0), p)
        return (lam * (alpha + 1.0) ** 2 * up * (u + delta) ** alpha * phi
                + (alpha + 1.0) * (u + delta) ** (alpha + 1.0) * lap)

    lq = ball_integral(profile, lhs_fn, cutoff.r0, knots)
    rq = ball_integral(profile, rhs_fn, cutoff.r0, knots)
    res = abs(lq.value - rq.value) / (abs(lq.value) + abs(rq.value) + 1.0)
    return EnergySides(lq.value, rq.value, res, lq.abs_error + rq.abs_error)


def log_gradient_integral(profile: RadialProfile, delta: float, R: float) -> Quad:
    """int_{B_R} |grad log(u+delta)|^2."""
    if delta == 0.0 and R >= profile.positivity_radius * (1.0 - 1e-12):
        raise RegimeError("delta = 0 needs R strictly inside the positivity radius")
    return ball_integral(profile, lambda r, u, du: (du / (u + delta)) ** 2, R)


def cutoff_energy_integral(cutoff: CutoffProfile, d: int, rtol: float = DEFAULT_RTOL) -> Quad:
    """int_{B_R0} |grad phi|^2 / phi."""
    from .cutoff import grad_sq_over_phi

    sd = surface_factor(d)
    q = adaptive_integrate(lambda r: grad_sq_over_phi(cutoff, r) * r ** (d - 1),
                           [0.0, *cutoff.knots], rtol=rtol)
    return Quad(sd * q.value, sd * q.abs_error, q.level)


# ---------------------------------------------------------------------------
# Divergence classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Divergence:
    status: str                 # "finite" | "divergent" | "inconclusive"
    value: Optional[float]
    threshold_exponent: Optional[float]
    trend: tuple = ()


def divergence_probe(profile: RadialProfile, q: float, R: float, budget: int = 5) -> Divergence:
    """Classify int_{B_R} u^q by a refinement trend and the exponent test gamma q >= d."""
    _check_radius(profile, R)
    if not profile.singular:
        v = lq_norm(profile, q, R)
        return Divergence("finite", v.value, None)
    d, g = profile.d, profile.gamma
    thr = d / g
    sd = surface_factor(d)
    trend = []
    for k in range(budget):
        eps = R * 10.0 ** (-3.0 * 2**k)

        def logh(s):
            r = np.exp(s)
            return q * np.log(profile.u(r)) + d * s

        lv, _, _ = log_adaptive_integrate(logh, [math.log(eps), math.log(R)])
        trend.append(sd * math.exp(lv))
    grows = trend[-1] > 10.0 * trend[0]
    exponent_div = g * q >= d * (1.0 - 1e-12)
    if grows and exponent_div:
        return Divergence("divergent", None, thr, tuple(trend))
    if not grows and not exponent_div:
        return Divergence("finite", lq_norm(profile, q, R).value, thr, tuple(trend))
    return Divergence("inconclusive", None, thr, tuple(trend))
