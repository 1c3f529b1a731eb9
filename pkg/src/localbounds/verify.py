"""Executable checks: each inequality evaluated on a concrete radial solution.

Every check returns a :class:`CheckResult` with both sides, the margin rhs/lhs
(kept in log space since constants reach 10^(+-4000)), a status and an anchor
naming the inequality.  A check passes only against 1, never against a tuned
expected margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import constants as C
from .cutoff import CutoffProfile
from .params import ProblemParams, RadiiChain, RegimeError, critical_exponents, positive_part
from .quadrature import (
    ball_integral,
    ball_measure,
    divergence_probe,
    energy_identity_sides,
    log_gradient_integral,
    log_power_integral,
    lq_norm,
    mean_integral,
    sup_inf,
)
from .radial import RadialProfile, build_profile, length_scale, perturbed, residual, singular_profile

PASS, FAIL, INCONCLUSIVE, INAPPLICABLE = "pass", "fail", "inconclusive", "inapplicable"
ENERGY_TOL = 1e-6
LN10 = math.log(10.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    log_lhs: Optional[float]
    log_rhs: Optional[float]
    lhs_rel_error: float
    rhs_rel_error: float
    status: str
    regime: str
    anchors: str
    reason: str = ""
    fixture: str = ""
    details: dict = field(default_factory=dict)

    @property
    def log_margin(self) -> Optional[float]:
        if self.log_lhs is None or self.log_rhs is None:
            return None
        return self.log_rhs - self.log_lhs

    @property
    def margin(self) -> Optional[float]:
        lm = self.log_margin
        if lm is None:
            return None
        return math.exp(lm) if lm < 709.0 else math.inf

    @property
    def lhs(self) -> Optional[float]:
        return _exp_or_none(self.log_lhs)

    @property
    def rhs(self) -> Optional[float]:
        return _exp_or_none(self.log_rhs)

    def to_dict(self) -> dict:
        lm = self.log_margin
        return {
            "name": self.name,
            "fixture": self.fixture,
            "lhs": _finite(self.lhs),
            "rhs": _finite(self.rhs),
            "log10_lhs": None if self.log_lhs is None else _finite(self.log_lhs / LN10),
            "log10_rhs": None if self.log_rhs is None else _finite(self.log_rhs / LN10),
            "lhs_rel_error": _finite(self.lhs_rel_error),
            "rhs_rel_error": _finite(self.rhs_rel_error),
            "margin": _finite(self.margin),
            "log10_margin": None if lm is None else _finite(lm / LN10),
            "status": self.status,
            "regime": self.regime,
            "anchors": self.anchors,
            "reason": self.reason,
            "details": _jsonable(self.details),
        }


def _exp_or_none(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _finite(x):
    if x is None or not isinstance(x, (int, float)):
        return x
    return float(x) if math.isfinite(x) else None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def decide(log_lhs: float, log_rhs: float, rel_l: float, rel_r: float, floor: float) -> str:
    """pass above 1+ea, fail below 1-ea, inconclusive in between."""
    if not (math.isfinite(log_lhs) or math.isfinite(log_rhs)):
        return INCONCLUSIVE
    ea = min(3.0 * (rel_l + rel_r) + floor, 0.5)
    lm = log_rhs - log_lhs
    if lm >= math.log1p(ea):
        return PASS
    if lm < math.log1p(-ea):
        return FAIL
    return INCONCLUSIVE


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@dataclass
class Fixture:
    name: str
    params: ProblemParams
    profile: RadialProfile
    chain: RadiiChain
    u0: Optional[float] = None

    @property
    def interp_floor(self) -> float:
        # interpolation error of shooting samples is not part of the quadrature bars
        return 1e-8 if self.profile.kind.startswith("shooting") else 1e-11


def default_chain(profile: RadialProfile, scale: float = 1.0) -> RadiiChain:
    r_plus = profile.positivity_radius if math.isfinite(profile.positivity_radius) else profile.r_max
    return RadiiChain.from_scale(scale * r_plus)


def validate_chain(profile: RadialProfile, chain: RadiiChain) -> None:
    """R0 must stay strictly inside the positivity radius (or inside r_max for entire profiles)."""
    if math.isfinite(profile.positivity_radius):
        if not chain.r0 < profile.positivity_radius:
            raise RegimeError(f"R0={chain.r0} must be below the positivity radius {profile.positivity_radius}")
    elif chain.r0 > profile.r_max:
        raise RegimeError(f"R0={chain.r0} exceeds the computed interval [0, {profile.r_max}]")


def make_fixture(params: ProblemParams, u0: float = 1.0, kind: str = "auto",
                 chain: Optional[RadiiChain] = None, tol: float = 1e-10, perturbation: float = 0.0,
                 scale: float = 1.0) -> Fixture:
    r_max = None
    if kind != "singular" and params.p >= critical_exponents(params.d).p_s:
        r_max = 2.0 * length_scale(params, u0)
    profile = build_profile(params, u0, kind, r_max, tol)
    if perturbation:
        profile = perturbed(profile, perturbation)
    ch = chain or default_chain(profile, scale)
    validate_chain(profile, ch)
    name = f"d={params.d},p={params.p:g},lambda={params.lam:g}"
    name += ",singular" if profile.singular else f",u0={u0:g}"
    if perturbation:
        name += f",perturbation={perturbation:g}"
    return Fixture(name, params, profile, ch, None if profile.singular else u0)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _inapplicable(name: str, fx: Fixture, reason: str, anchors: str) -> CheckResult:
    return CheckResult(name, None, None, 0.0, 0.0, INAPPLICABLE, C.p_regime(fx.params), anchors,
                       reason, fx.name)


def _result(name: str, fx: Fixture, log_lhs: float, log_rhs: float, rel_l: float, rel_r: float,
            anchors: str, details: Optional[dict] = None, reason: str = "") -> CheckResult:
    status = decide(log_lhs, log_rhs, rel_l, rel_r, fx.interp_floor)
    return CheckResult(name, log_lhs, log_rhs, rel_l, rel_r, status, C.p_regime(fx.params), anchors,
                       reason, fx.name, details or {})


def _table_guard(fx: Fixture, column: str) -> Optional[str]:
    app = C.applicability(fx.params)[column]
    return None if app.applicable else app.reason


def _solution_guard(fx: Fixture) -> Optional[str]:
    if p_outside(fx):
        return "No: p >= p_s, outside every theorem"
    if not fx.profile.is_solution:
        return "hypothesis: profile is not a solution of the equation"
    return None


def p_outside(fx: Fixture) -> bool:
    return C.p_regime(fx.params) == C.OUTSIDE


SINGULAR_REASON = "singular profile: not in W^{1,2}_loc and unbounded at the origin"


def _norm_log(fx: Fixture, q: float, R: float, delta: float = 0.0) -> tuple[float, float]:
    lv, rel, _ = log_power_integral(fx.profile, q, R, delta)
    return lv / q, rel / abs(q)


def _log_mean(fx: Fixture, q: float, R: float) -> tuple[float, float]:
    """log of the mean of u^q over B_R, with its relative error."""
    lv, rel, _ = log_power_integral(fx.profile, q, R)
    return lv - math.log(ball_measure(fx.params.d, R)), rel


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_energy_identity(fx: Fixture, alpha: float, delta: float) -> CheckResult:
    name = f"energy_identity[alpha={alpha:g},delta={delta:g}]"
    anchor = "local energy identity tested against the piecewise-quadratic cutoff"
    if fx.profile.singular:
        return _inapplicable(name, fx, SINGULAR_REASON, anchor)
    cut = CutoffProfile(fx.chain.r_inf, fx.chain.r0)
    sides = energy_identity_sides(fx.profile, cut, alpha, delta)
    res = max(sides.residual, 1e-300)
    status = PASS if sides.residual <= ENERGY_TOL else FAIL
    return CheckResult(name, math.log(res), math.log(ENERGY_TOL), 0.0, 0.0, status,
                       C.p_regime(fx.params), anchor, "", fx.name,
                       {"identity_lhs": sides.lhs, "identity_rhs": sides.rhs,
                        "relative_residual": sides.residual, "tolerance": ENERGY_TOL})


def check_caccioppoli(fx: Fixture, delta: float = 0.0) -> CheckResult:
    name = f"caccioppoli[delta={delta:g}]"
    anchor = "quantitative Caccioppoli estimate"
    if (g := _solution_guard(fx)):
        return _inapplicable(name, fx, g, anchor)
    lam, p, d = fx.params.lam, fx.params.p, fx.params.d
    R, R0 = fx.chain.r_inf, fx.chain.r0
    q1 = ball_integral(fx.profile, lambda r, u, du: lam * np.power(u, p) / (u + delta), R)
    q2 = log_gradient_integral(fx.profile, delta, R)
    lhs = q1.value + q2.value
    rhs = C.caccioppoli_rhs(d, R0, R)
    return _result(name, fx, _safe_log(lhs), math.log(rhs), (q1.abs_error + q2.abs_error) / lhs, 0.0,
                   anchor, {"R": R, "R0": R0, "delta": delta})


def check_caccioppoli_absolute(fx: Fixture) -> CheckResult:
    name = "caccioppoli_absolute"
    anchor = "absolute bound on the local integral of u^(p-1)"
    if (g := _solution_guard(fx)):
        return _inapplicable(name, fx, g, anchor)
    lam, p, d = fx.params.lam, fx.params.p, fx.params.d
    R, R0 = fx.chain.r_inf, fx.chain.r0
    q = ball_integral(fx.profile, lambda r, u, du: lam * np.power(u, p - 1.0), R)
    rhs = C.caccioppoli_rhs(d, R0, R)
    return _result(name, fx, _safe_log(q.value), math.log(rhs), q.abs_error / q.value, 0.0, anchor,
                   {"R": R, "R0": R0})


def check_upper(fx: Fixture, q: Optional[float] = None, s2: Optional[float] = None) -> CheckResult:
    name = "upper" if q is None else f"upper[q={q:g}]"
    anchor = "local upper estimate (L^q to L^infinity)"
    for g in (_table_guard(fx, "upper"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    if fx.profile.singular:
        return _inapplicable(name, fx, SINGULAR_REASON, anchor)
    d, p = fx.params.d, fx.params.p
    w = C.ExponentWindow(q=q).resolve(fx.params)
    q_used = C.nudge_q(d, p, w.q)
    const = C.upper_I_inf(fx.params, fx.chain, q_used, s2)
    R, R0 = fx.chain.r_inf, fx.chain.r0
    si = sup_inf(fx.profile, R)
    log_mq, rel_q = _log_mean(fx, q_used, R0)
    if p > 1.0:
        mu = d / (2.0 * q_used - d * (p - 1.0))
        log_mp, rel_p = _log_mean(fx, p - 1.0, R)
        log_rhs = const.log_value + (1.0 + (p - 1.0) * mu) / q_used * log_mq - mu * log_mp
        rel = (1.0 + (p - 1.0) * mu) / q_used * rel_q + mu * rel_p
    else:
        log_rhs = const.log_value + log_mq / q_used
        rel = rel_q / q_used
    det = {"q": q_used, "log10_constant": const.log10}
    if q_used != w.q:
        det["q_requested"] = w.q
    return _result(name, fx, math.log(si.sup), log_rhs, 0.0, rel, anchor, det)


def check_upper_second_form(fx: Fixture, q0: float = 0.5, r_over: Optional[float] = None,
                            s2: Optional[float] = None) -> CheckResult:
    name = "upper_second_form" if q0 == 0.5 and r_over is None else f"upper_second_form[q0={q0:g}]"
    anchor = "local upper bound, second form (unbounded coefficient b = lam u^(p-1))"
    for g in (_table_guard(fx, "upper_second_form"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    d, p, lam = fx.params.d, fx.params.p, fx.params.lam
    R, R0 = fx.chain.r_inf, fx.chain.r0
    if p > 1.0:
        thr = d * (p - 1.0) / 2.0
        r_over = thr + 1.5 if r_over is None else r_over
        if not r_over > thr:
            return _inapplicable(name, fx, f"regime: r_over={r_over:g} <= d(p-1)/2={thr:g}", anchor)
    if fx.profile.singular:
        return _inapplicable(name, fx, SINGULAR_REASON, anchor)
    si = sup_inf(fx.profile, R)
    log_n0, rel0 = _norm_log(fx, q0, fx.chain.outer)
    if p > 1.0:
        u_norm = lq_norm(fx.profile, r_over, R0)
        mult = C.second_form_multiplier(fx.params, fx.chain, q0, r_over, u_norm.value, s2)
        det = {"q0": q0, "r_over": r_over, "u_norm": u_norm.value}
    else:
        inf0 = sup_inf(fx.profile, R0).inf
        b_norm = lam * inf0 ** (p - 1.0)
        mult = C.coefficient_form_multiplier(fx.params, fx.chain, q0, math.inf, b_norm, s2)
        det = {"q0": q0, "r": "inf", "b_sup": b_norm}
    det["log10_multiplier"] = mult.log10
    return _result(name, fx, math.log(si.sup), mult.log_value + log_n0, 0.0, rel0, anchor, det)


def check_lower(fx: Fixture, q: Optional[float] = None, eps: float = 0.1,
                s2: Optional[float] = None) -> CheckResult:
    name = "lower"
    anchor = "local lower estimate (L^q to L^-infinity)"
    for g in (_table_guard(fx, "lower"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    d = fx.params.d
    q = C.q0_threshold(d, eps) / 2.0 if q is None else q
    R, R0 = fx.chain.r_inf, fx.chain.r0
    const = C.lower_I(d, q, eps, R0, R, s2)
    log_n, rel = _norm_log(fx, q, R0)
    log_lhs = const.log_value + log_n - math.log(ball_measure(d, R0)) / q
    inf = sup_inf(fx.profile, R).inf
    return _result(name, fx, log_lhs, math.log(inf), rel, 0.0, anchor,
                   {"q": q, "eps": eps, "log10_constant": const.log10})


def _pc_exponents(fx: Fixture, q_over: Optional[float]) -> tuple[float, float]:
    d, p = fx.params.d, fx.params.p
    ex = critical_exponents(d)
    if q_over is None:
        q_over = 0.5 * (d * (p - 1.0) / 2.0 + ex.p_c)
    q_under = min(C.q0_threshold(d, math.e), q_over)
    return q_over, q_under


def check_lower_pc(fx: Fixture, q_over: Optional[float] = None,
                   s2: Optional[float] = None) -> CheckResult:
    name = "lower_pc"
    anchor = "local lower estimate for 1<p<p_c (L^q_over to L^-infinity)"
    for g in (_table_guard(fx, "lower_pc"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    d = fx.params.d
    ch = fx.chain
    q_over, q_under = _pc_exponents(fx, q_over)
    low = C.lower_I(d, q_under, math.e, ch.r0, ch.r_inf, s2)
    rh = C.rev_holder_I(fx.params, q_over, q_under, ch.r_bar, ch.r0, s2, variant="lower")
    log_n, rel = _norm_log(fx, q_over, ch.r_bar)
    log_lhs = low.log_value - rh.log_value + log_n - math.log(ball_measure(d, ch.r_bar)) / q_over
    inf = sup_inf(fx.profile, ch.r_inf).inf
    return _result(name, fx, log_lhs, math.log(inf), rel, 0.0, anchor,
                   {"q_over": q_over, "q_under": q_under})


def check_rev_holder(fx: Fixture, q: Optional[float] = None, delta: float = 0.0,
                     eps: float = 0.1) -> CheckResult:
    name = f"rev_holder[delta={delta:g}]"
    anchor = "reverse Holder inequality for supersolutions"
    # a positive constant is superharmonic, hence an admissible supersolution
    guards = [_table_guard(fx, "lower")]
    if fx.profile.kind != "constant-stub":
        guards.append(_solution_guard(fx))
    for g in guards:
        if g:
            return _inapplicable(name, fx, g, anchor)
    d = fx.params.d
    q = C.q0_threshold(d, eps) if q is None else q
    R0 = fx.chain.r0
    log_b = math.log(ball_measure(d, R0))
    log_factor = 2.0 / q * (math.log(eps) - d * math.log(2.0) - math.log(math.e * d + eps))
    log_pos, rel_pos = _norm_log(fx, q, R0, delta)
    log_neg, rel_neg = _norm_log(fx, -q, R0, delta)
    log_lhs = log_factor + log_pos - log_b / q
    log_rhs = log_neg + log_b / q
    return _result(name, fx, log_lhs, log_rhs, rel_pos, rel_neg, anchor,
                   {"q": q, "eps": eps, "delta": delta})


def check_rev_holder_pc(fx: Fixture, q_over: Optional[float] = None,
                        s2: Optional[float] = None) -> CheckResult:
    name = "rev_holder_pc"
    anchor = "two-exponent reverse Holder inequality for 1<p<p_c"
    for g in (_table_guard(fx, "lower_pc"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    d = fx.params.d
    ch = fx.chain
    q_over, q0 = _pc_exponents(fx, q_over)
    const = C.rev_holder_I(fx.params, q_over, q0, ch.r_bar, ch.r0, s2, variant="statement")
    log_a, rel_a = _norm_log(fx, q_over, ch.r_bar)
    log_b, rel_b = _norm_log(fx, q0, ch.r0)
    log_lhs = log_a - math.log(ball_measure(d, ch.r_bar)) / q_over
    log_rhs = const.log_value + log_b - math.log(ball_measure(d, ch.r0)) / q0
    return _result(name, fx, log_lhs, log_rhs, rel_a, rel_b, anchor,
                   {"q_over": q_over, "q0": q0, "branch": const.params["branch"]})


def harnack_for(fx: Fixture, window: Optional[C.ExponentWindow] = None,
                s2: Optional[float] = None) -> C.HarnackValue:
    """Harnack constant for the fixture; u-dependent norms only in the general regime."""
    params, ch = fx.params, fx.chain
    regime = C.p_regime(params)
    if regime in (C.SUBLINEAR, C.LINEAR, C.SUBCRITICAL):
        return C.harnack_constant(params, ch, window, None, s2)
    w = (window or C.ExponentWindow()).resolve(params)
    q_over = C.nudge_q(params.d, params.p, w.q_over)
    norms = C.HarnackNorms(
        mean_q_r0=mean_integral(fx.profile, q_over, ch.r0).value,
        mean_pm_rinf=mean_integral(fx.profile, params.pm, ch.r_inf).value if params.pm > 0 else 1.0,
        mean_qover_r0=mean_integral(fx.profile, q_over, ch.r0).value,
        mean_qunder_r0=mean_integral(fx.profile, w.q_under, ch.r0).value,
    )
    return C.harnack_general(params, ch, norms, q_over, w.q_under, w.eps, s2)


def check_harnack(fx: Fixture, window: Optional[C.ExponentWindow] = None,
                  s2: Optional[float] = None) -> CheckResult:
    name = "harnack"
    anchor = "Harnack inequality sup <= H inf on the inner ball"
    for g in (_table_guard(fx, "harnack"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    if fx.profile.singular:
        return _inapplicable(name, fx, SINGULAR_REASON + "; the norms in H_p[u] diverge", anchor)
    h = harnack_for(fx, window, s2)
    si = sup_inf(fx.profile, fx.chain.r_inf)
    det = {"log10_H": h.constant.log10, "constant": h.constant.name, "u_dependent": h.constant.name.endswith("[u]")}
    if h.n0 is not None:
        det.update({"n0": h.n0, "q0": h.q0, "eps": h.eps})
    if h.warnings:
        det["warnings"] = list(h.warnings)
    return _result(name, fx, math.log(si.sup), h.log_value + math.log(si.inf), 0.0, 0.0, anchor, det)


def check_absolute(fx: Fixture, s2: Optional[float] = None) -> CheckResult:
    name = "absolute"
    anchor = "local absolute bounds (no norm of u on the right side)"
    for g in (_table_guard(fx, "absolute"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    b = C.absolute_bounds(fx.params, fx.chain, s2)
    si = sup_inf(fx.profile, fx.chain.r_inf)
    if b.upper is not None:
        return _result(name, fx, math.log(si.sup), b.upper.log_value, 0.0, 0.0, anchor,
                       {"side": "upper", "log10_bound": b.upper.log10})
    return _result(name, fx, b.lower.log_value, math.log(si.inf), 0.0, 0.0, anchor,
                   {"side": "lower", "log10_bound": b.lower.log10})


def check_gradient(fx: Fixture, s2: Optional[float] = None) -> CheckResult:
    name = "gradient"
    anchor = "local upper bound for the gradient"
    for g in (_table_guard(fx, "gradient"), _solution_guard(fx)):
        if g:
            return _inapplicable(name, fx, g, anchor)
    if fx.profile.singular:
        return _inapplicable(name, fx, SINGULAR_REASON + "; the gradient is unbounded", anchor)
    ch = fx.chain
    sup0 = sup_inf(fx.profile, ch.r0).sup
    bp = C.bp_bound(fx.params, ch, sup_norm=sup0, s2=s2)
    K = C.gradient_K(fx.params, ch, bp, s2)
    log_n, rel = _norm_log(fx, 2.0, ch.r0)
    lhs = sup_inf(fx.profile, ch.r_inf).sup_grad
    return _result(name, fx, _safe_log(lhs), K.log_value + log_n, 0.0, rel, anchor,
                   {"log10_K": K.log10, "log10_b_p": bp.log10})


def check_gradient_absolute(fx: Fixture, s2: Optional[float] = None) -> CheckResult:
    name = "gradient_absolute"
    anchor = "local absolute gradient bound for 1<p<p_c"
    if C.p_regime(fx.params) != C.SUBCRITICAL:
        return _inapplicable(name, fx, "No", anchor)
    if (g := _solution_guard(fx)):
        return _inapplicable(name, fx, g, anchor)
    K = C.gradient_K_absolute(fx.params, fx.chain, s2)
    lhs = sup_inf(fx.profile, fx.chain.r_inf).sup_grad
    return _result(name, fx, _safe_log(lhs), K.log_value, 0.0, 0.0, anchor, {"log10_K": K.log10})


def moser_trace(fx: Fixture, q: Optional[float] = None, n_max: int = 6,
                s2: Optional[float] = None) -> list[CheckResult]:
    """Single Moser steps n = 1..n_max on the radius schedule, plus the beta_n limit."""
    anchor = "single Moser iteration step on the shrinking radius schedule"
    for g in (_table_guard(fx, "upper"), _solution_guard(fx)):
        if g:
            return [_inapplicable("moser_trace", fx, g, anchor)]
    if fx.profile.singular:
        return [_inapplicable("moser_trace", fx, SINGULAR_REASON, anchor)]
    d, p = fx.params.d, fx.params.p
    pm = positive_part(p - 1.0)
    w = C.ExponentWindow(q=q).resolve(fx.params)
    two_star = 2.0 * d / (d - 2.0)
    beta0 = 2.0 * w.q / two_star
    betas = C.beta_schedule(d, p, beta0, n_max)
    radii = C.radii_schedule(fx.chain, d, p, beta0, n_max)
    out = []
    for n in range(1, n_max + 1):
        bn = betas[n]
        name = f"moser_step[n={n}]"
        if abs(bn - 1.0) <= 1e-12:
            out.append(_inapplicable(name, fx, "beta_n = 1: step skipped", anchor))
            continue
        rn, rprev = radii[n], radii[n - 1]
        s = two_star / 2.0 * bn
        log_l, rel_l = _norm_log(fx, s, rn)
        log_int, rel_i, _ = log_power_integral(fx.profile, bn + pm, rprev)
        log_pm = None
        if pm > 0.0:
            log_pm, _, _ = log_power_integral(fx.profile, pm, rprev)
        log_I = C.moser_step_log_constant(fx.params, bn, rn, rprev, log_pm, s2)
        log_r = (log_I + log_int) / bn
        out.append(_result(name, fx, log_l, log_r, rel_l, rel_i / bn, anchor,
                           {"beta": bn, "R_n": rn, "R_prev": rprev}))
    limit = beta0 - (d - 2.0) * pm / 2.0
    far = C.beta_closed_form(d, p, beta0, 60) * ((d - 2.0) / d) ** 60
    err = abs(far - limit) / max(abs(limit), 1e-300)
    tol = 1e-10
    out.append(CheckResult("moser_beta_limit", math.log(max(err, 1e-300)), math.log(tol), 0.0, 0.0,
                           PASS if err <= tol else FAIL, C.p_regime(fx.params),
                           "limit of beta_n (2/2*)^n", "", fx.name,
                           {"beta0": beta0, "limit": limit, "relative_error": err}))
    gaps = math.fsum(radii[k - 1] - radii[k] for k in range(1, len(radii)))
    out[-1].details["radii"] = list(radii)
    out[-1].details["partial_gap_sum"] = gaps
    return out


def counterexample_singular(params: ProblemParams, R: float = 1.0) -> CheckResult:
    """Singular solution: divergence exactly above d(p-1)/2, unbounded sup, no u-free Harnack."""
    name = "counterexample_singular"
    anchor = "supercritical singular solution A r^(-2/(p-1))"
    ex = critical_exponents(params.d)
    if not ex.p_c < params.p < ex.p_s:
        return CheckResult(name, None, None, 0.0, 0.0, INAPPLICABLE, C.p_regime(params), anchor,
                           "regime: needs p_c < p < p_s", f"d={params.d},p={params.p:g}")
    prof = singular_profile(params, R)
    fx = Fixture(f"d={params.d},p={params.p:g},lambda={params.lam:g},singular", params, prof,
                 RadiiChain.from_scale(R))
    thr = params.d * (params.p - 1.0) / 2.0
    classes = {}
    ok = True
    for q in (thr - 0.5, thr - 0.1, thr, thr + 0.5):
        res = divergence_probe(prof, q, R)
        expected = "divergent" if q >= thr else "finite"
        classes[f"{q:g}"] = res.status
        ok &= res.status == expected
    res_sup = residual(prof, np.geomspace(1e-3, R, 1000), relative=True)
    sup_div = sup_inf(prof, R).sup_divergent
    harn = check_harnack(fx)
    ok &= sup_div and harn.status == INAPPLICABLE and res_sup <= 1e-8
    return CheckResult(name, None, None, 0.0, 0.0, PASS if ok else FAIL, C.p_regime(params), anchor,
                       "", fx.name, {"threshold": thr, "classification": classes,
                                     "relative_residual": res_sup, "sup_divergent": sup_div,
                                     "harnack_status": harn.status})


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

ENERGY_ALPHAS = (-2.0, -0.5, 1.0, 2.0)
ENERGY_DELTAS = (0.0, 0.1)

CHECK_NAMES = (
    "energy_identity", "caccioppoli", "caccioppoli_absolute", "upper", "upper_second_form",
    "lower", "lower_pc", "rev_holder", "rev_holder_pc", "harnack", "absolute", "gradient",
    "gradient_absolute", "moser_trace", "counterexample_singular",
)


def run_checks(fx: Fixture, selection: Optional[Iterable[str]] = None,
               window: Optional[C.ExponentWindow] = None, s2: Optional[float] = None,
               n_max: int = 6) -> list[CheckResult]:
    sel = set(CHECK_NAMES if selection is None or "all" in selection else selection)
    unknown = sel - set(CHECK_NAMES)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    w = window or C.ExponentWindow()
    out: list[CheckResult] = []

    def guarded(fn, *args, **kw):
        try:
            res = fn(*args, **kw)
        except RegimeError as exc:
            name = fn.__name__.replace("check_", "")
            res = _inapplicable(name, fx, f"regime: {exc}", "")
        return res if isinstance(res, list) else [res]

    if "energy_identity" in sel:
        for a in ENERGY_ALPHAS:
            for dl in ENERGY_DELTAS:
                if dl == 0.0 and not a > -1.0:
                    continue
                out += guarded(check_energy_identity, fx, a, dl)
    if "caccioppoli" in sel:
        for dl in (1.0, 0.1, 0.01, 0.0):
            out += guarded(check_caccioppoli, fx, dl)
    if "caccioppoli_absolute" in sel:
        out += guarded(check_caccioppoli_absolute, fx)
    if "upper" in sel:
        out += guarded(check_upper, fx, w.q, s2)
    if "upper_second_form" in sel:
        out += guarded(check_upper_second_form, fx, w.q0, w.r_over, s2)
    if "lower" in sel:
        out += guarded(check_lower, fx, w.q_under, w.eps, s2)
    if "lower_pc" in sel:
        out += guarded(check_lower_pc, fx, w.q_over, s2)
    if "rev_holder" in sel:
        for dl in (0.0, 1.0):
            out += guarded(check_rev_holder, fx, None, dl, w.eps)
    if "rev_holder_pc" in sel:
        out += guarded(check_rev_holder_pc, fx, w.q_over, s2)
    if "harnack" in sel:
        out += guarded(check_harnack, fx, w, s2)
    if "absolute" in sel:
        out += guarded(check_absolute, fx, s2)
    if "gradient" in sel:
        out += guarded(check_gradient, fx, s2)
    if "gradient_absolute" in sel:
        out += guarded(check_gradient_absolute, fx, s2)
    if "moser_trace" in sel:
        out += guarded(moser_trace, fx, w.q, n_max, s2)
    if "counterexample_singular" in sel and fx.profile.singular:
        out += guarded(counterexample_singular, fx.params, fx.profile.r_max)
    return out


def summarize(results: Sequence[CheckResult]) -> dict:
    counts = {PASS: 0, FAIL: 0, INAPPLICABLE: 0, INCONCLUSIVE: 0}
    by_check: dict[str, dict] = {}
    worst = None
    for r in results:
        counts[r.status] += 1
        base = r.name.split("[")[0]
        entry = by_check.setdefault(base, {PASS: 0, FAIL: 0, INAPPLICABLE: 0, INCONCLUSIVE: 0,
                                           "worst_log10_margin": None})
        entry[r.status] += 1
        lm = r.log_margin
        if lm is not None and r.status in (PASS, FAIL, INCONCLUSIVE):
            v = lm / LN10
            if entry["worst_log10_margin"] is None or v < entry["worst_log10_margin"]:
                entry["worst_log10_margin"] = v
            if worst is None or v < worst:
                worst = v
    return {**counts, "worst_log10_margin": worst,
            "worst_margin": None if worst is None else _finite(10.0**worst if worst < 308 else math.inf),
            "by_check": by_check}
