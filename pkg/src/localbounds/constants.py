"""Explicit constants of the quantitative local theory for -Laplace(u) = lam u^p.

Most of these constants are astronomically large or small (exponents such as
d/(2q) with q ~ 1e-3 are routine), so every formula is evaluated in log space
and returned as a :class:`ConstantValue` carrying ``log_value``.  ``value`` is
the plain float when representable and 0.0 / inf otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .params import (
    ProblemParams,
    RadiiChain,
    RegimeError,
    critical_exponents,
    lambda_p,
    log_ball_volume,
    log_gamma,
    positive_part,
)

INTEGER_TOL = 1e-9
E = math.e


# ---------------------------------------------------------------------------
# Structured values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantValue:
    name: str
    log_value: float
    regime: str
    anchor: str
    params: dict = field(default_factory=dict, compare=False)
    notes: tuple = ()

    @property
    def value(self) -> float:
        if self.log_value > 709.7:
            return math.inf
        return math.exp(self.log_value)

    @property
    def log10(self) -> float:
        return self.log_value / math.log(10.0)

    def to_dict(self) -> dict:
        v = self.value
        return {
            "name": self.name,
            "value": v if math.isfinite(v) else None,
            "log10_value": self.log10,
            "regime": self.regime,
            "anchor": self.anchor,
            "params": self.params,
            "notes": list(self.notes),
        }


def logsumexp(logs: Sequence[float]) -> float:
    logs = [x for x in logs if x != -math.inf]
    if not logs:
        return -math.inf
    m = max(logs)
    return m + math.log(math.fsum(math.exp(x - m) for x in logs))


def _log(x: float, what: str) -> float:
    if not (x > 0.0) or not math.isfinite(x):
        raise RegimeError(f"{what} must be finite and positive, got {x}")
    return math.log(x)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# Regimes and the table of results
# ---------------------------------------------------------------------------

SUBLINEAR = "0<=p<1"
LINEAR = "p=1"
SUBCRITICAL = "1<p<p_c"
CRITICAL = "p=p_c"
SUPERCRITICAL = "p_c<p<p_s"
OUTSIDE = "p>=p_s"


def p_regime(params: ProblemParams) -> str:
    ex = critical_exponents(params.d)
    p = params.p
    if p >= ex.p_s or _close(p, ex.p_s):
        return OUTSIDE
    if p < 1.0:
        return SUBLINEAR
    if p == 1.0:
        return LINEAR
    if _close(p, ex.p_c):
        return CRITICAL
    if p < ex.p_c:
        return SUBCRITICAL
    return SUPERCRITICAL


# Columns: which bound is available, per p-window.  "No" entries carry the reason
# reported for inapplicable checks.  The exact value p = p_c is grouped with the
# supercritical row (every theorem used there is stated for p_c <= p < p_s).
RESULTS_TABLE = {
    SUBLINEAR: {"upper": "Yes", "upper_second_form": "Yes", "lower": "Yes", "lower_pc": "No",
                "harnack": "H_p", "absolute": "lower", "gradient": "upper"},
    LINEAR: {"upper": "Yes", "upper_second_form": "Yes", "lower": "Yes", "lower_pc": "No",
             "harnack": "H_1", "absolute": "No", "gradient": "upper"},
    SUBCRITICAL: {"upper": "Yes", "upper_second_form": "Yes", "lower": "Yes", "lower_pc": "Yes",
                  "harnack": "H_p", "absolute": "upper", "gradient": "absolute"},
    CRITICAL: {"upper": "Yes", "upper_second_form": "Yes", "lower": "Yes", "lower_pc": "No",
               "harnack": "H_p[u]", "absolute": "No", "gradient": "upper"},
    SUPERCRITICAL: {"upper": "Yes", "upper_second_form": "Yes", "lower": "Yes", "lower_pc": "No",
                    "harnack": "H_p[u]", "absolute": "No", "gradient": "upper"},
    OUTSIDE: {"upper": "No", "upper_second_form": "No", "lower": "No", "lower_pc": "No",
              "harnack": "No", "absolute": "No", "gradient": "No"},
}


@dataclass(frozen=True)
class Applicability:
    applicable: bool
    entry: str
    reason: str


def applicability(params: ProblemParams) -> dict[str, Applicability]:
    """Per-theorem availability for the p-window of ``params``."""
    regime = p_regime(params)
    row = RESULTS_TABLE[regime]
    out = {}
    for key, entry in row.items():
        if entry == "No":
            reason = "No" if regime != OUTSIDE else "No: p >= p_s, outside every theorem"
            out[key] = Applicability(False, entry, reason)
        else:
            out[key] = Applicability(True, entry, "")
    return out


# ---------------------------------------------------------------------------
# Exponent window
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentWindow:
    """Exponent choices; ``None`` means "use the default for the problem"."""

    q: Optional[float] = None
    q_over: Optional[float] = None
    q_under: Optional[float] = None
    eps: float = 0.1
    alpha: float = 1.0
    q0: float = 0.5
    r_over: Optional[float] = None

    def resolve(self, params: ProblemParams) -> "ExponentWindow":
        d, pm = params.d, params.pm
        ex = critical_exponents(d)
        q = self.q if self.q is not None else d * pm / 2.0 + 2.5
        q_over = self.q_over
        if q_over is None:
            if 1.0 < params.p < ex.p_c:
                q_over = 0.5 * (d * pm / 2.0 + ex.p_c)
            else:
                q_over = q
        q_under = self.q_under if self.q_under is not None else q0_threshold(d, self.eps)
        r_over = self.r_over if self.r_over is not None else d * pm / 2.0 + 1.5
        return replace(self, q=q, q_over=q_over, q_under=q_under, r_over=r_over)

    def as_dict(self) -> dict:
        return {
            "q": self.q, "q_over": self.q_over, "q_under": self.q_under, "eps": self.eps,
            "alpha": self.alpha, "q0": self.q0, "r_over": self.r_over,
        }


# ---------------------------------------------------------------------------
# Sobolev constant
# ---------------------------------------------------------------------------


def log_sobolev_constant(d: int, override: Optional[float] = None) -> float:
    """log S_2.  Default: optimal whole-space constant for ||f||_{2*} <= S ||grad f||_2."""
    if d < 3:
        raise RegimeError("Sobolev constant needs d >= 3")
    if override is not None:
        if not (override > 0.0) or not math.isfinite(override):
            raise RegimeError(f"Sobolev constant override must be positive, got {override}")
        return math.log(override)
    return -0.5 * math.log(math.pi * d * (d - 2)) + (log_gamma(d) - log_gamma(0.5 * d)) / d


def sobolev_constant(d: int, override: Optional[float] = None) -> float:
    return math.exp(log_sobolev_constant(d, override))


# ---------------------------------------------------------------------------
# Upper estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class C1Result:
    c1: Optional[float]
    k0: Optional[int]
    admissible: bool
    log_ratio: Optional[float]


def _admissibility_ratio(d: int, p: float, q: float) -> float:
    pm = positive_part(p - 1.0)
    two_star = 2.0 * d / (d - 2)
    return math.log((two_star - d * pm) / (2.0 * q - d * pm)) / math.log(d / (d - 2))


def c1_and_k0(d: int, p: float, q: float) -> C1Result:
    pm = positive_part(p - 1.0)
    if not q > d * pm / 2.0:
        raise RegimeError(f"q={q} must exceed d(p-1)_+/2={d * pm / 2.0}")
    q_crit = d / (d - 2)
    if q > q_crit and not _close(q, q_crit):
        return C1Result((d - 2) * q / ((d - 2) * q - d), None, True, None)
    a = _admissibility_ratio(d, p, q)
    if abs(a - round(a)) <= INTEGER_TOL:
        return C1Result(None, None, False, a)
    k0 = math.floor(a)
    best = -math.inf
    for i in (0, 1):
        t = (d / (d - 2)) ** (k0 - 1 + i) * (q - d * pm / 2.0) + pm * (d - 2) / 2.0
        best = max(best, t / abs(t - 1.0))
    return C1Result(best, k0, True, a)


def nudge_q(d: int, p: float, q: float, k_max: int = 30) -> float:
    """Return q if admissible, else the largest admissible point q(1 - 2^-k 1e-3), k <= k_max."""
    if c1_and_k0(d, p, q).admissible:
        return q
    floor = d * positive_part(p - 1.0) / 2.0
    for k in range(k_max, -1, -1):
        cand = q * (1.0 - 2.0**-k * 1e-3)
        if cand > floor and c1_and_k0(d, p, cand).admissible:
            return cand
    raise RegimeError(f"no admissible grid point below q={q}")


def upper_I_inf(params: ProblemParams, chain: RadiiChain, q: float,
                s2: Optional[float] = None) -> ConstantValue:
    """Constant of the local L^q -> L^infinity estimate."""
    d, p = params.d, params.p
    pm = params.pm
    if p_regime(params) == OUTSIDE:
        raise RegimeError("upper estimates need p < p_s")
    if not q > d * pm / 2.0:
        raise RegimeError(f"upper estimate needs q > d(p-1)_+/2 = {d * pm / 2.0}")
    c1 = c1_and_k0(d, p, q)
    if not c1.admissible:
        raise RegimeError(f"q={q} is inadmissible (log ratio {c1.log_ratio} is an integer)")
    rho = chain.rho
    expo = d / (2.0 * q - d * pm)
    omega_expo = 2.0 / d if p > 1.0 else 0.0
    first = (math.log(c1.c1) + 2.0 * log_sobolev_constant(d, s2)
             + omega_expo * log_ball_volume(d) - 2.0 * math.log1p(-rho))
    sq = math.sqrt(d) - math.sqrt(d - 2)
    bracket = (lambda_p(p, params.lam) + (d - 2) / q
               + (1.0 - rho) ** 2 * max((d - 2) * abs(d * q - (d - 2)) / (d * q) ** 2, 0.25))
    second = d * math.log(d / (d - 2)) + math.log(2.0 * (d - 2)) - 2.0 * math.log(sq) + math.log(bracket)
    return ConstantValue(
        "I_inf_q", expo * (first + second), p_regime(params),
        "local upper estimate: L^q to L^infinity constant",
        {"q": q, "rho": rho, "c1": c1.c1, "k0": c1.k0},
    )


def caccioppoli_rhs(d: int, r0: float, r: float) -> float:
    if not 0.0 < r < r0:
        raise RegimeError(f"Caccioppoli bound needs 0 < R < R0, got R={r}, R0={r0}")
    return 8.0 * math.exp(log_ball_volume(d)) * r0**d / (r0 - r) ** 2


# ---------------------------------------------------------------------------
# Unbounded-coefficient Moser iteration
# ---------------------------------------------------------------------------


def _r_terms(r: float, d: int) -> tuple[float, float, float]:
    """(rd/(2r-d), (2r-d)/(rd), rd/(d+r(d-2))) with the r = infinity limits."""
    if math.isinf(r):
        return d / 2.0, 2.0 / d, d / (d - 2.0)
    if not r > d / 2.0:
        raise RegimeError(f"integrability exponent r={r} must exceed d/2={d / 2.0}")
    return r * d / (2.0 * r - d), (2.0 * r - d) / (r * d), r * d / (d + r * (d - 2.0))


def young_K1(r: float, d: int) -> float:
    """(2r-d)/(rd) [rd/(d+r(d-2))]^((d+r(d-2))/(2r-d)); r = inf gives the limit."""
    if math.isinf(r):
        return 2.0 / d * (d / (d - 2.0)) ** ((d - 2.0) / 2.0)
    _, inv, base = _r_terms(r, d)
    return inv * math.exp((d + r * (d - 2.0)) / (2.0 * r - d) * math.log(base))


def reverse_poincare_K2(alpha: float, r: float, d: int, R: float, b_norm: float,
                        phi_bounds: tuple[float, float, float], s2: Optional[float] = None) -> float:
    """Reverse Poincare constant for subsolutions of -Laplace(u) = b u."""
    if not alpha > 0.0:
        raise RegimeError("reverse Poincare constant needs alpha > 0")
    if b_norm < 0.0:
        raise RegimeError("coefficient norm must be >= 0")
    sup_phi, sup_grad, sup_lap = phi_bounds
    ex, _, _ = _r_terms(r, d)
    terms = [math.log(2.0 * sup_phi * sup_lap) if sup_phi * sup_lap > 0 else -math.inf,
             2.0 * math.log(sup_grad) if sup_grad > 0 else -math.inf]
    if b_norm > 0.0 and sup_phi > 0.0:
        s_expo = 2.0 * (d + r * (d - 2.0)) / (2.0 * r - d) if math.isfinite(r) else d
        terms.append(
            s_expo * log_sobolev_constant(d, s2)
            + ex * math.log((alpha + 1.0) ** 2 / (2.0 * alpha))
            + math.log(young_K1(r, d)) + 2.0 * math.log(sup_phi)
            + (d - 2.0) / d * (log_ball_volume(d) + d * math.log(R))
            + ex * math.log(b_norm)
        )
    return (alpha + 1.0) / alpha * math.exp(logsumexp(terms))


def moser_K3(q: float, r: float, d: int, r0: float, r_inf: float, b_norm: float,
             s2: Optional[float] = None) -> ConstantValue:
    """Moser iteration constant K_q^(3)[b]; r = inf selects the bounded-coefficient form."""
    if not q > 1.0:
        raise RegimeError("Moser iteration constant needs q > 1")
    if not 0.0 < r_inf < r0:
        raise RegimeError("Moser iteration constant needs 0 < R_inf < R0")
    ex, inv, base = _r_terms(r, d)
    lead = ex * d / (2.0 * q) * math.log(q * d**d / 2.0**d)
    terms = [math.log(8.0 * q * (d + 2.0) / (q - 1.0)), 2.0 * math.log((r0 - r_inf) / r_inf)]
    if b_norm > 0.0:
        terms.append(
            ex * (2.0 * log_sobolev_constant(d, s2) - math.log(2.0)) + math.log(inv)
            + (1.0 + ex) * math.log(q / (q - 1.0) * base)
            + 2.0 * math.log(r0 - r_inf)
            + (d - 2.0) / d * (log_ball_volume(d) + d * math.log(r0))
            + ex * math.log(b_norm)
        )
    return ConstantValue(
        "K3_q", lead + d / (2.0 * q) * logsumexp(terms), "any",
        "Moser iteration for -Laplace(u) = b u", {"q": q, "r": r, "b_norm": b_norm},
    )


def degiorgi_c(alpha: float, lam: float, theta: float) -> float:
    if not alpha > 0.0 or not 0.0 <= theta < 1.0:
        raise RegimeError("De Giorgi constant needs alpha > 0 and 0 <= theta < 1")
    lo = theta ** (1.0 / alpha)
    if not lo < lam < 1.0:
        raise RegimeError(f"lambda must lie in ({lo}, 1)")
    return 1.0 / ((1.0 - lam) ** alpha * (1.0 - theta / lam**alpha))


def extension_constant(q_over: float, q_under: float, q0: float, gamma: float, K: float,
                       r0: float, r_inf: float) -> ConstantValue:
    """Multiplier that trades ||u||_{q_under} for ||u||_{q0} in a two-radius bound."""
    if not (0.0 < q0 <= q_under < q_over) or not gamma > 0.0 or not K > 0.0:
        raise RegimeError("extension constant needs 0 < q0 <= q_under < q_over, gamma > 0, K > 0")
    if math.isinf(q_over):
        two_expo = (q_under - q0) / q0
        outer = q_under / q0
    else:
        two_expo = q_over * (q_under - q0) / (q0 * (q_over - q_under))
        outer = q_under * (q_over - q0) / (q0 * (q_over - q_under))
    inner = gamma * math.log(4.0 * gamma * outer) + math.log(K) - gamma * math.log(r0 - r_inf)
    return ConstantValue(
        "extension", math.log(3.0) + two_expo * math.log(2.0) + outer * inner, "any",
        "extension of two-radius upper bounds to small exponents",
        {"q_over": q_over, "q_under": q_under, "q0": q0, "gamma": gamma},
    )


@dataclass(frozen=True)
class AConstants:
    log_a1: float
    log_a2: float
    log_a3: float
    branch: str

    @property
    def values(self) -> tuple[float, float, float]:
        return math.exp(self.log_a1), math.exp(self.log_a2), math.exp(self.log_a3)


def a_constants(q0: float, r: float, d: int, R: float, r_inf: float,
                s2: Optional[float] = None) -> AConstants:
    if not q0 > 0.0:
        raise RegimeError("q0 must be positive")
    if not 0.0 < r_inf < R:
        raise RegimeError("A-constants need 0 < R_inf < R")
    ex, inv, base = _r_terms(r, d)
    ratio2 = ((R - r_inf) / r_inf) ** 2
    a1_expo = ex * d / (2.0 * q0)
    if q0 > 1.0:
        la1 = a1_expo * math.log(q0 * d**d / 2.0**d)
        la2 = math.log(8.0 * q0 * (d + 2.0) / (q0 - 1.0) + ratio2)
        frac = q0 / (q0 - 1.0)
        branch = "q0>1"
    else:
        la1 = (math.log(3.0) + (2.0 * d + 1.0) / q0 * math.log(2.0) + d / q0 * math.log(d / q0)
               + a1_expo * math.log((q0 + 1.0) * d**d / 2.0**d))
        la2 = math.log(8.0 * (q0 + 1.0) * (d + 2.0) / q0 + ratio2)
        frac = (q0 + 1.0) / q0
        branch = "0<q0<=1"
    la3 = (ex * (2.0 * log_sobolev_constant(d, s2) - math.log(2.0)) + math.log(inv)
           + (1.0 + ex) * math.log(frac * base) + 2.0 * math.log(R - r_inf)
           + (d - 2.0) / d * (log_ball_volume(d) + d * math.log(R)))
    return AConstants(la1, la2, la3, branch)


def second_form_multiplier(params: ProblemParams, chain: RadiiChain, q0: float,
                           r_over: float, u_norm: float,
                           s2: Optional[float] = None) -> ConstantValue:
    """Multiplier M with sup_{B_R_inf} u <= M ||u||_{q0,R} (superlinear second form)."""
    d, p, lam = params.d, params.p, params.lam
    if not p > 1.0 or p_regime(params) == OUTSIDE:
        raise RegimeError("second form needs 1 < p < p_s")
    thr = d * (p - 1.0) / 2.0
    if not r_over > thr:
        raise RegimeError(f"r_over={r_over} must exceed d(p-1)/2={thr}")
    r = r_over / (p - 1.0)
    R = chain.outer
    A = a_constants(q0, r, d, R, chain.r_inf, s2)
    den = 2.0 * r_over - d * (p - 1.0)
    terms = [A.log_a2]
    if u_norm > 0.0:
        terms.append(A.log_a3 + d * (p - 1.0) / den * math.log(lam)
                     + d * (p - 1.0) * r_over / den * math.log(u_norm))
    log_m = A.log_a1 - d / q0 * math.log(chain.r0 - chain.r_inf) + d / (2.0 * q0) * logsumexp(terms)
    return ConstantValue(
        "second_form", log_m, p_regime(params),
        "local upper bound, second form (coefficient b = lam u^(p-1))",
        {"q0": q0, "r_over": r_over, "u_norm": u_norm, "branch": A.branch},
    )


second_form_bracket = second_form_multiplier


def coefficient_form_multiplier(params: ProblemParams, chain: RadiiChain, q0: float, r: float,
                                b_norm: float, s2: Optional[float] = None) -> ConstantValue:
    """Multiplier for sup u <= M ||u||_{q0,R} with a coefficient b in L^r(B_R0)."""
    d = params.d
    A = a_constants(q0, r, d, chain.outer, chain.r_inf, s2)
    ex, _, _ = _r_terms(r, d)
    terms = [A.log_a2]
    if b_norm > 0.0:
        terms.append(A.log_a3 + ex * math.log(b_norm))
    log_m = A.log_a1 - d / q0 * math.log(chain.r0 - chain.r_inf) + d / (2.0 * q0) * logsumexp(terms)
    return ConstantValue(
        "coefficient_form", log_m, p_regime(params),
        "local upper bound with unbounded coefficient b",
        {"q0": q0, "r": r, "b_norm": b_norm, "branch": A.branch},
    )


# ---------------------------------------------------------------------------
# Lower estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JNConstants:
    kappa0: float
    kappa1: float
    kappa3: float


def jn_constants(d: int, diam: float, vol: float, kappa2: float,
                 mt_exponent: Optional[float] = None) -> JNConstants:
    """John-Nirenberg constants and the potential Moser-Trudinger constant (exponent d by default)."""
    if not kappa2 > (d - 1) * E:
        raise RegimeError(f"kappa2 must exceed (d-1)e = {(d - 1) * E}")
    p = float(d) if mt_exponent is None else mt_exponent
    if not kappa2 > (p - 1) * E:
        raise RegimeError("kappa2 must exceed (p-1)e")
    omega = math.exp(log_ball_volume(d))
    k0 = d * vol * kappa2 / diam**d
    k1 = omega * diam**d * (kappa2 + E) / (kappa2 - (d - 1) * E)
    k3 = vol + diam**d / math.sqrt(2.0 * math.pi) * p * E * omega / (kappa2 - (p - 1) * E)
    return JNConstants(k0, k1, k3)


def log_q0_threshold(d: float, eps: float) -> float:
    if not eps > 0.0:
        raise RegimeError("eps must be positive")
    return ((d - 3.0) / 2.0 * math.log(2.0) - math.log(d) - 2.0 * log_ball_volume(d)
            - math.log(E * (d - 1.0) + eps))


def q0_threshold(d: float, eps: float) -> float:
    """Largest admissible exponent of the lower estimates."""
    return math.exp(log_q0_threshold(d, eps))


def lower_I(d: int, q: float, eps: float, r0: float, r_inf: float,
            s2: Optional[float] = None) -> ConstantValue:
    """Constant of the local lower estimate inf u >= I ||u||_q / |B|^(1/q)."""
    if not q > 0.0:
        raise RegimeError("lower estimate needs q > 0")
    thr = q0_threshold(d, eps)
    if q > thr * (1.0 + 1e-12):
        raise RegimeError(f"q={q} exceeds the threshold q0={thr}")
    if not 0.0 < r_inf < r0:
        raise RegimeError("lower estimate needs 0 < R_inf < R0")
    geo = d * r0**2 / (r0 - r_inf) ** 2 + r0**2 / r_inf**2
    b1 = d * math.log(2.0) + 2.0 * log_sobolev_constant(d, s2) + math.log(geo)
    b2 = math.log(eps) - d * math.log(2.0) - math.log(E * d + eps) - 0.5 * log_ball_volume(d)
    return ConstantValue(
        "I_minus_inf_q", -d / (2.0 * q) * b1 + 2.0 / q * b2, "any",
        "local lower estimate constant", {"q": q, "eps": eps},
    )


def rev_holder_I(params: ProblemParams, q_over: float, q0: float, r_bar: float, r0: float,
                 s2: Optional[float] = None, variant: str = "statement") -> ConstantValue:
    """Two-exponent reverse Holder constant for 1 < p < p_c.

    ``variant="statement"`` ends the small-q0 branch with (R_bar/R0)^(d/q0);
    ``variant="lower"`` uses (R0/R_bar)^(d/q_over), the form fed into the
    lower and Harnack estimates.
    """
    d, p = params.d, params.p
    ex = critical_exponents(d)
    if not d * (p - 1.0) / 2.0 < q_over < ex.p_c:
        raise RegimeError(f"q_over={q_over} must lie in (d(p-1)/2, d/(d-2))")
    if not 0.0 < q0 <= q_over:
        raise RegimeError("need 0 < q0 <= q_over")
    if not 0.0 < r_bar < r0:
        raise RegimeError("need 0 < R_bar < R0")
    ls2 = 2.0 * log_sobolev_constant(d, s2)
    lw = log_ball_volume(d) / d
    t = 2.0 * d * q_over / (ex.two_star - 2.0 * q_over)
    if (d - 2.0) / d * q_over <= q0:
        branch = "upper"
        val = (ex.two_star / (2.0 * q_over) * (ls2 + math.log(t + ((r0 - r_bar) / r_bar) ** 2))
               + ex.two_star / q_over * (lw + math.log(r0 / (r0 - r_bar)))
               + d / q_over * math.log(r0 / r_bar))
    else:
        branch = "lower"
        val = (math.log(3.0) + ((d - 2.0) * q_over / (2.0 * q0) - d / 2.0) * math.log(2.0)
               + (q_over - q0) / (q_over * q0) * d / 2.0
               * (ls2 + math.log(t * r_bar**2 / (r0 - r_bar) ** 2 + 1.0))
               + (d / q0 - d / q_over) * (math.log(4.0 * (q_over - q0) / (q0 * q_over)) + lw))
        if variant == "statement":
            val += d / q0 * math.log(r_bar / r0)
        elif variant == "lower":
            val += d / q_over * math.log(r0 / r_bar)
        else:
            raise ValueError(f"unknown variant {variant!r}")
    return ConstantValue(
        "I_qbar_q0", val, SUBCRITICAL, "reverse Holder inequality for 1<p<p_c",
        {"q_over": q_over, "q0": q0, "branch": branch, "variant": variant},
    )


# ---------------------------------------------------------------------------
# Harnack constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarnackValue:
    constant: ConstantValue
    regime: str
    n0: Optional[int] = None
    eps: Optional[float] = None
    q0: Optional[float] = None
    q_over: Optional[float] = None
    q_under: Optional[float] = None
    warnings: tuple = ()

    @property
    def log_value(self) -> float:
        return self.constant.log_value


@dataclass(frozen=True)
class HarnackNorms:
    """Mean integrals needed by the u-dependent Harnack constant."""

    mean_q_r0: float        # mean over B_R0 of u^q  (q = q_over)
    mean_pm_rinf: float     # mean over B_Rinf of u^(p-1)_+
    mean_qover_r0: float    # mean over B_R0 of u^q_over
    mean_qunder_r0: float   # mean over B_R0 of u^q_under


def sublinear_n0(d: int) -> tuple[int, int, float]:
    """(n0 from first positive eps, n0 from the closed integer-part rule, eps)."""
    lw = log_ball_volume(d)
    big_l = (math.log(E * (d - 1.0)) + math.log(d) + 2.0 * lw - (d - 3.0) / 2.0 * math.log(2.0)) \
        / math.log(d / (d - 2.0))
    closed = math.floor(big_l + 1.5)

    def eps_of(n: int) -> float:
        return math.exp((n - 0.5) * math.log(d / (d - 2.0)) + (d - 3.0) / 2.0 * math.log(2.0)
                        - math.log(d) - 2.0 * lw) - E * (d - 1.0)

    n = math.floor(big_l) - 2
    while eps_of(n) <= 0.0:
        n += 1
    return n, closed, eps_of(n)


def harnack_sublinear(params: ProblemParams, chain: RadiiChain,
                      s2: Optional[float] = None) -> HarnackValue:
    d, p = params.d, params.p
    if not 0.0 <= p <= 1.0:
        raise RegimeError("solution-free sublinear Harnack constant needs 0 <= p <= 1")
    n0, closed, eps = sublinear_n0(d)
    warnings = ()
    if n0 != closed:
        warnings = (f"n0 rules disagree: first-positive-eps gives {n0}, integer-part rule gives {closed}",)
    q0 = ((d - 2.0) / d) ** (n0 - 0.5)
    r0, ri = chain.r0, chain.r_inf
    ls2 = log_sobolev_constant(d, s2)
    lw = log_ball_volume(d)
    gap = r0 - ri
    t1 = d / (2.0 * q0) * (d * math.log(2.0) + 4.0 * ls2 + 2.0 * math.log(r0 / gap)
                           + math.log(d * r0**2 / gap**2 + r0**2 / ri**2))
    x = math.exp((n0 - 0.5) * math.log(d / (d - 2.0)) + (d - 3.0) / 2.0 * math.log(2.0)
                 - math.log(d) - 2.0 * lw)
    t2 = 2.0 / q0 * (d * math.log(2.0) + math.log(x + E) + 0.5 * lw - math.log(x - E * (d - 1.0)))
    sq = math.sqrt(d) - math.sqrt(d - 2.0)
    bracket = (lambda_p(p, params.lam) + (d - 2.0) / q0
               + gap**2 / ri**2 * max((d - 2.0) * abs(d * q0 - (d - 2.0)) / (d * q0) ** 2, 0.25))
    t3 = d / (2.0 * q0) * (d * math.log(d / (d - 2.0)) + math.log(2.0 * (d - 2.0) * math.sqrt(d))
                           - 3.0 * math.log(sq) + math.log(bracket))
    cv = ConstantValue("H_p", t1 + t2 + t3, p_regime(params),
                       "Harnack inequality, 0<=p<=1 (solution-free)",
                       {"n0": n0, "q0": q0, "eps": eps}, warnings)
    return HarnackValue(cv, p_regime(params), n0=n0, eps=eps, q0=q0, warnings=warnings)


def harnack_subcritical(params: ProblemParams, chain: RadiiChain, q_over: Optional[float] = None,
                        q_under: Optional[float] = None,
                        s2: Optional[float] = None) -> HarnackValue:
    d, p = params.d, params.p
    if p_regime(params) != SUBCRITICAL:
        raise RegimeError("solution-free superlinear Harnack constant needs 1 < p < p_c")
    if chain.r_bar is None:
        raise RegimeError("Harnack constant for 1<p<p_c needs an intermediate radius")
    ex = critical_exponents(d)
    lo = d * (p - 1.0) / 2.0
    if q_over is None:
        q_over = 0.5 * (lo + ex.p_c)
    notes = []
    q_adm = nudge_q(d, p, q_over)
    if q_adm != q_over:
        notes.append(f"q_over nudged from {q_over!r} to {q_adm!r}")
        q_over = q_adm
    q0 = q0_threshold(d, E)
    if q_under is None:
        q_under = min(q0, q_over)
    if not 0.0 < q_under <= min(q0, q_over) * (1.0 + 1e-12):
        raise RegimeError("q_under must lie in (0, min(q0, q_over)]")
    upper = upper_I_inf(params, chain, q_over, s2)
    lower = lower_I(d, q_under, E, chain.r0, chain.r_inf, s2)
    rh = rev_holder_I(params, q_over, q_under, chain.r_bar, chain.r0, s2, variant="lower")
    expo = 2.0 * q_over / (2.0 * q_over - d * (p - 1.0))
    log_h = upper.log_value + expo * (rh.log_value - lower.log_value)
    cv = ConstantValue("H_p", log_h, SUBCRITICAL, "Harnack inequality, 1<p<p_c (solution-free)",
                       {"q_over": q_over, "q_under": q_under}, tuple(notes))
    return HarnackValue(cv, SUBCRITICAL, q_over=q_over, q_under=q_under, q0=q0, warnings=tuple(notes))


def harnack_general(params: ProblemParams, chain: RadiiChain, norms: HarnackNorms,
                    q_over: float, q_under: float, eps: float = 0.1,
                    s2: Optional[float] = None) -> HarnackValue:
    """u-dependent Harnack constant valid for 0 <= p < p_s."""
    d, pm = params.d, params.pm
    if p_regime(params) == OUTSIDE:
        raise RegimeError("Harnack inequality needs p < p_s")
    notes = []
    q_adm = nudge_q(d, params.p, q_over)
    if q_adm != q_over:
        notes.append(f"q_over nudged from {q_over!r} to {q_adm!r}")
        q_over = q_adm
    upper = upper_I_inf(params, chain, q_over, s2)
    lower = lower_I(d, q_under, eps, chain.r0, chain.r_inf, s2)
    for name, v in vars(norms).items():
        if not (v > 0.0 and math.isfinite(v)):
            raise RegimeError(f"Harnack norm {name} must be finite and positive, got {v}")
    expo = d / (2.0 * q_over - d * pm)
    ratio = pm / q_over * math.log(norms.mean_q_r0) - math.log(norms.mean_pm_rinf) if pm > 0 else 0.0
    log_h = (upper.log_value - lower.log_value + expo * ratio
             + math.log(norms.mean_qover_r0) / q_over - math.log(norms.mean_qunder_r0) / q_under)
    cv = ConstantValue("H_p[u]", log_h, p_regime(params), "Harnack inequality, 0<=p<p_s (u-dependent)",
                       {"q_over": q_over, "q_under": q_under, "eps": eps}, tuple(notes))
    return HarnackValue(cv, p_regime(params), eps=eps, q_over=q_over, q_under=q_under,
                        warnings=tuple(notes))


def harnack_constant(params: ProblemParams, chain: RadiiChain,
                     window: Optional[ExponentWindow] = None,
                     u_norms: Optional[HarnackNorms] = None,
                     s2: Optional[float] = None) -> HarnackValue:
    """Dispatch to the Harnack constant of the p-window."""
    regime = p_regime(params)
    if regime == OUTSIDE:
        raise RegimeError("Harnack inequality needs p < p_s")
    if regime in (SUBLINEAR, LINEAR):
        return harnack_sublinear(params, chain, s2)
    if regime == SUBCRITICAL:
        w = window or ExponentWindow()
        return harnack_subcritical(params, chain, w.q_over, None if w.q_under is None else
                                   min(w.q_under, q0_threshold(params.d, E)), s2)
    if u_norms is None:
        raise RegimeError("u-dependent Harnack constant needs mean integrals of u")
    w = (window or ExponentWindow()).resolve(params)
    return harnack_general(params, chain, u_norms, w.q_over, w.q_under, w.eps, s2)


# ---------------------------------------------------------------------------
# Absolute bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsoluteBounds:
    upper: Optional[ConstantValue]
    lower: Optional[ConstantValue]
    reason: str = ""


def absolute_bounds(params: ProblemParams, chain: RadiiChain,
                    s2: Optional[float] = None,
                    harnack: Optional[HarnackValue] = None) -> AbsoluteBounds:
    """Norm-free bounds on B_R with R = R_inf: an upper one for 1<p<p_c, a lower one for p<1."""
    d, p, lam = params.d, params.p, params.lam
    regime = p_regime(params)
    R, r0 = chain.r_inf, chain.r0
    log_base = math.log(8.0) + d * math.log(r0) - math.log(lam) - 2.0 * math.log(r0 - R) - d * math.log(R)
    if regime == SUBCRITICAL:
        h = harnack or harnack_subcritical(params, chain, s2=s2)
        up = ConstantValue("absolute_upper", h.log_value + log_base / (p - 1.0), regime,
                           "local absolute upper bound, 1<p<p_c", {"R": R})
        return AbsoluteBounds(up, None)
    if regime == SUBLINEAR:
        h = harnack or harnack_sublinear(params, chain, s2)
        lo = ConstantValue("absolute_lower", -h.log_value - log_base / (1.0 - p), regime,
                           "local absolute lower bound, 0<=p<1", {"R": R})
        return AbsoluteBounds(None, lo)
    return AbsoluteBounds(None, None, "No")


# ---------------------------------------------------------------------------
# Gradient bounds
# ---------------------------------------------------------------------------


def bp_bound(params: ProblemParams, chain: RadiiChain, sup_norm: Optional[float] = None,
             s2: Optional[float] = None, harnack: Optional[HarnackValue] = None) -> ConstantValue:
    """Bound on u^(p-1) entering the gradient estimate."""
    d, p, lam = params.d, params.p, params.lam
    regime = p_regime(params)
    if regime == OUTSIDE:
        raise RegimeError("gradient bound needs p < p_s")
    if p == 1.0:
        return ConstantValue("b_p", 0.0, regime, "coefficient bound, p=1", {})
    if regime in (SUBLINEAR, SUBCRITICAL):
        if harnack is None:
            harnack = (harnack_sublinear(params, chain, s2) if regime == SUBLINEAR
                       else harnack_subcritical(params, chain, s2=s2))
        r0, ri = chain.r0, chain.r_inf
        lv = (math.log(8.0) + d * math.log(r0) + abs(p - 1.0) * harnack.log_value - math.log(lam)
              - 2.0 * math.log(r0 - ri) - d * math.log(ri))
        return ConstantValue("b_p", lv, regime, "coefficient bound via the Harnack constant", {})
    if sup_norm is None:
        raise RegimeError("for p_c <= p < p_s the coefficient bound needs sup of u on B_R0")
    return ConstantValue("b_p", (p - 1.0) * _log(sup_norm, "sup norm"), regime,
                         "coefficient bound via sup norm", {"sup_norm": sup_norm})


def gradient_K(params: ProblemParams, chain: RadiiChain, b_p: ConstantValue,
               s2: Optional[float] = None) -> ConstantValue:
    """K[u] with ||grad u||_{inf,R_inf} <= K[u] ||u||_{2,R0}."""
    d, p, lam = params.d, params.p, params.lam
    r0, ri = chain.r0, chain.r_inf
    gap = r0 - ri
    log_lb = math.log(lam) + b_p.log_value
    t1 = d / 2.0 * math.log(15.0 / gap)
    t2 = 0.5 * logsumexp([log_lb, math.log(18.0 * d / gap**2)])
    t3 = d**2 / 8.0 * (math.log(2.0) + d * math.log(d) - d * math.log(2.0))
    inner = [math.log(16.0 * (d + 2.0) + gap**2 / (9.0 * ri**2)),
             d / 2.0 * (math.log(d * max(p, 1.0) / (d - 2.0)) + 2.0 * log_sobolev_constant(d, s2))
             + math.log(4.0 * gap**2 / (9.0 * (d - 2.0)))
             + (d - 2.0) / d * (log_ball_volume(d) + d * math.log(r0)) + d / 2.0 * log_lb]
    t4 = d / 4.0 * logsumexp(inner)
    return ConstantValue("K_grad", t1 + t2 + t3 + t4, p_regime(params), "local gradient upper bound",
                         {"log_b_p": b_p.log_value})


def gradient_K_absolute(params: ProblemParams, chain: RadiiChain, s2: Optional[float] = None,
                        harnack: Optional[HarnackValue] = None) -> ConstantValue:
    """Norm-free bound on ||grad u||_{inf,R_inf} for 1 < p < p_c."""
    d, p, lam = params.d, params.p, params.lam
    if p_regime(params) != SUBCRITICAL:
        raise RegimeError("absolute gradient bound needs 1 < p < p_c")
    h = (harnack or harnack_subcritical(params, chain, s2=s2)).log_value
    r0, ri = chain.r0, chain.r_inf
    gap = r0 - ri
    lw = log_ball_volume(d)
    lead = (d**2 / 8.0 * (d * math.log(d) - (d - 1.0) * math.log(2.0)) + d / 2.0 * math.log(15.0)
            + h + 0.5 * lw + d / 2.0 * math.log(ri) - (1.0 + d / 2.0 + 2.0 / (p - 1.0)) * math.log(gap))
    sq = 0.5 * logsumexp([math.log(8.0) + d * math.log(r0) + (p - 1.0) * h - d * math.log(ri),
                          math.log(18.0 * d)])
    pw = (math.log(8.0) + d * math.log(r0) - math.log(lam) - d * math.log(ri)) / (p - 1.0)
    inner = [math.log(16.0 * (d + 2.0) + gap**2 / (9.0 * ri**2)),
             d / 2.0 * (math.log(d * p / (d - 2.0)) + 2.0 * log_sobolev_constant(d, s2))
             + (2.0 + 1.5 * d) * math.log(2.0) + (d - 2.0) / d * lw
             + (d**2 / 2.0 + d - 2.0) * math.log(r0)
             - math.log(9.0 * (d - 2.0)) - 2.0 * (d - 1.0) * math.log(gap) - d**2 / 2.0 * math.log(ri)
             + d * (p - 1.0) / 2.0 * h]
    return ConstantValue("K_grad_absolute", lead + sq + pw + d / 4.0 * logsumexp(inner), SUBCRITICAL,
                         "local absolute gradient bound, 1<p<p_c", {})


# ---------------------------------------------------------------------------
# Moser schedule (used by the step-by-step trace)
# ---------------------------------------------------------------------------


def beta_schedule(d: int, p: float, beta0: float, n: int) -> list[float]:
    """beta_0..beta_n from the recursion beta_k = (2*/2) beta_{k-1} - (p-1)_+."""
    pm = positive_part(p - 1.0)
    if not beta0 > pm * (d - 2) / 2.0:
        raise RegimeError("Moser schedule needs beta0 > (p-1)_+ (d-2)/2")
    ratio = d / (d - 2.0)
    out = [beta0]
    for _ in range(n):
        out.append(ratio * out[-1] - pm)
    return out


def beta_closed_form(d: int, p: float, beta0: float, n: int) -> float:
    pm = positive_part(p - 1.0)
    c = pm * (d - 2) / 2.0
    return (d / (d - 2.0)) ** n * (beta0 - c) + c


def radii_schedule(chain: RadiiChain, d: int, p: float, beta0: float, n: int) -> list[float]:
    """R_0 > R_1 > ... > R_n with (R_{k-1}-R_k)^2 = (R_0-R_inf)^2 c0^2 / beta_k."""
    pm = positive_part(p - 1.0)
    betas = beta_schedule(d, p, beta0, n)
    # c0^-1 = sum_{k>=1} beta_k^(-1/2); beta_k grows geometrically
    total, k, b = 0.0, 0, beta0
    ratio = d / (d - 2.0)
    while True:
        k += 1
        b = ratio * b - pm
        term = b ** -0.5
        total += term
        if term < 1e-17 * total or k > 10_000:
            break
    c0 = 1.0 / total
    radii = [chain.r0]
    for kk in range(1, n + 1):
        radii.append(radii[-1] - (chain.r0 - chain.r_inf) * c0 / math.sqrt(betas[kk]))
    return radii


def moser_step_log_constant(params: ProblemParams, beta: float, r_inner: float, r_outer: float,
                            log_int_pm: Optional[float], s2: Optional[float] = None) -> float:
    """log I(p, beta, R_n, R_{n-1}); ``log_int_pm`` = log of the integral of u^(p-1)_+ over B_{R_{n-1}}."""
    d, p = params.d, params.p
    gap = r_outer - r_inner
    lv = 2.0 * log_sobolev_constant(d, s2) - 2.0 * math.log(gap)
    if params.pm > 0.0:
        lv += log_ball_volume(d) + d * math.log(r_outer) - log_int_pm
    lam_p = lambda_p(p, params.lam)
    bracket = (lam_p * beta**2 + d * beta) / abs(beta - 1.0) + gap**2 / r_inner**2
    return lv + math.log(bracket)
