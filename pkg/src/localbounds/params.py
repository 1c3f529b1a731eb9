"""Problem parameters, critical exponents, ball volumes and elementary identities.

Everything here is a pure function of its arguments.  Real powers go through
exp/log so that the exponent ``p`` never needs to be rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional


class RegimeError(ValueError):
    """Raised when parameters fall outside the window where a formula is valid."""


def positive_part(x: float) -> float:
    return x if x > 0.0 else 0.0


# ---------------------------------------------------------------------------
# log-Gamma (Lanczos, g = 7, nine terms)
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def log_gamma(x: float) -> float:
    """Natural log of |Gamma(x)| for real x that is not a non-positive integer."""
    if x < 0.5:
        s = math.sin(math.pi * x)
        if s == 0.0:
            raise ValueError(f"log_gamma pole at x={x}")
        return math.log(math.pi / abs(s)) - log_gamma(1.0 - x)
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(acc)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemParams:
    """The PDE instance -Laplace(u) = lam * u**p in dimension d."""

    d: int
    p: float
    lam: float

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 3:
            raise RegimeError(f"dimension must be an integer >= 3, got d={self.d}")
        if not (self.p >= 0.0) or not math.isfinite(self.p):
            raise RegimeError(f"exponent must be finite and >= 0, got p={self.p}")
        if not (self.lam > 0.0) or not math.isfinite(self.lam):
            raise RegimeError(f"coefficient must be finite and > 0, got lambda={self.lam}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def pm(self) -> float:
        """(p - 1)_+"""
        return positive_part(self.p - 1.0)

    @property
    def exponents(self) -> "CriticalExponents":
        return critical_exponents(self.d, self.p)

    def as_dict(self) -> dict:
        return {"d": self.d, "p": self.p, "lambda": self.lam}


@dataclass(frozen=True)
class CriticalExponents:
    two_star: float
    p_c: float
    p_s: float
    p_1: float
    q_bar: Optional[float] = None


@dataclass(frozen=True)
class RadiiChain:
    """Nested radii 0 < r_inf < r_bar < r0 <= r.  ``r_bar`` and ``r`` are optional."""

    r_inf: float
    r0: float
    r_bar: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self) -> None:
        radii = [self.r_inf]
        if self.r_bar is not None:
            radii.append(self.r_bar)
        radii.append(self.r0)
        if not all(math.isfinite(x) and x > 0.0 for x in radii):
            raise RegimeError(f"radii must be finite and positive: {radii}")
        if any(a >= b for a, b in zip(radii, radii[1:])):
            raise RegimeError(f"radii must be strictly increasing: {radii}")
        if self.r is not None and not (math.isfinite(self.r) and self.r >= self.r0):
            raise RegimeError(f"enclosing radius must be >= r0, got r={self.r}")

    @property
    def rho(self) -> float:
        return self.r_inf / self.r0

    @property
    def outer(self) -> float:
        """Enclosing radius R, defaulting to r0."""
        return self.r0 if self.r is None else self.r

    @classmethod
    def from_scale(cls, scale: float, fractions=(0.25, 0.5, 0.75)) -> "RadiiChain":
        a, b, c = fractions
        return cls(r_inf=a * scale, r_bar=b * scale, r0=c * scale)

    def scaled(self, factor: float) -> "RadiiChain":
        return RadiiChain(
            r_inf=self.r_inf * factor,
            r0=self.r0 * factor,
            r_bar=None if self.r_bar is None else self.r_bar * factor,
            r=None if self.r is None else self.r * factor,
        )

    def as_dict(self) -> dict:
        return {"r_inf": self.r_inf, "r_bar": self.r_bar, "r0": self.r0, "r": self.r}


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def critical_exponents(d: int, p: Optional[float] = None) -> CriticalExponents:
    if d < 3:
        raise RegimeError(f"dimension must be >= 3, got d={d}")
    q_bar = None if p is None else d * positive_part(p - 1.0) / 2.0
    return CriticalExponents(
        two_star=2.0 * d / (d - 2),
        p_c=d / (d - 2),
        p_s=(d + 2) / (d - 2),
        p_1=(d + 1) / (d - 1),
        q_bar=q_bar,
    )


def log_ball_volume(d: float) -> float:
    """log of the volume of the unit ball; d may be any real >= 1 (scan mode)."""
    if d < 1:
        raise RegimeError(f"ball volume needs d >= 1, got {d}")
    return 0.5 * d * math.log(math.pi) - log_gamma(1.0 + 0.5 * d)


def ball_volume(d: float) -> float:
    return math.exp(log_ball_volume(d))


class BallVolume(NamedTuple):
    value: float
    log_value: float
    stirling_low: float
    stirling_high: float

    @property
    def in_band(self) -> bool:
        return self.stirling_low <= self.value <= self.stirling_high


def stirling_ball_volume_band(d: float) -> tuple[float, float]:
    """Stirling bracket (2*e*pi/d)^(d/2) / sqrt(pi*d) * exp(-alpha_d),
    1/(6d+1) <= alpha_d <= 1/(6d)."""
    log_base = 0.5 * d * math.log(2.0 * math.e * math.pi / d) - 0.5 * math.log(math.pi * d)
    return math.exp(log_base - 1.0 / (6.0 * d)), math.exp(log_base - 1.0 / (6.0 * d + 1.0))


def ball_volume_report(d: float) -> BallVolume:
    lv = log_ball_volume(d)
    lo, hi = stirling_ball_volume_band(d)
    return BallVolume(math.exp(lv), lv, lo, hi)


def lambda_p(p: float, lam: float) -> float:
    if p < 0 or lam <= 0:
        raise RegimeError("lambda_p needs p >= 0 and lambda > 0")
    return lam / 4.0 if p == 1.0 else 2.0


@dataclass(frozen=True)
class SeriesCheck:
    closed_form: float
    brute_force: float

    @property
    def abs_error(self) -> float:
        return abs(self.closed_form - self.brute_force)


@dataclass(frozen=True)
class SeriesIdentities:
    d: int
    k: int
    total: SeriesCheck
    weighted_total: SeriesCheck
    tail: SeriesCheck
    head: SeriesCheck


def _brute_sum(s: float, start: int, stop: Optional[int], weighted: bool = False) -> float:
    # summed smallest-first to keep rounding below 1e-15
    if stop is None:
        stop = start
        while s ** stop * max(stop, 1) > 1e-22:
            stop += 1
    terms = [(j if weighted else 1.0) * s**j for j in range(start, stop + 1)]
    return math.fsum(reversed(terms))


def series_identities(d: int, k: int) -> SeriesIdentities:
    """Geometric sums in the ratio s = 2/2* = (d-2)/d, with closed forms.

    The head sum closed form is (d-2)/2 * (1 - s^k).
    """
    if d < 3 or k < 0:
        raise RegimeError("series identities need d >= 3 and k >= 0")
    s = (d - 2) / d
    total = SeriesCheck((d - 2) / 2.0, _brute_sum(s, 1, None))
    weighted = SeriesCheck(d * (d - 2) / 4.0, _brute_sum(s, 1, None, weighted=True))
    tail = SeriesCheck(0.5 * d * s ** (k + 1), _brute_sum(s, k + 1, None))
    head_bf = _brute_sum(s, 1, k) if k >= 1 else 0.0
    head = SeriesCheck((d - 2) / 2.0 * (1.0 - s**k), head_bf)
    return SeriesIdentities(d, k, total, weighted, tail, head)


def _pow0(x: float, e: float) -> float:
    # 0^0 = 1; 0^positive = 0
    if x == 0.0:
        return 1.0 if e == 0.0 else 0.0
    try:
        return x**e
    except OverflowError:
        return math.inf


def power_gap_inequality(a: float, b: float, p: float) -> tuple[bool, Optional[bool]]:
    """Evaluate (a-b)(a^p-b^p) <= max(p,1) max(a^(p-1), b^(p-1)) (a-b)^2
    and, for p >= 1, a^p - b^p >= p b^(p-1) (a-b).

    Zero bases raised to a negative power are dropped from the max; with a = b = 0
    both sides vanish.
    """
    if a < 0 or b < 0 or p <= 0:
        raise RegimeError("power gap inequality needs a, b >= 0 and p > 0")
    lhs = (a - b) * (_pow0(a, p) - _pow0(b, p))
    cands = [_pow0(x, p - 1.0) for x in (a, b) if x > 0.0 or p >= 1.0]
    if lhs <= 0.0 or a == b:
        first = lhs <= 0.0
    elif not cands:
        first = False
    else:
        # logs keep (a-b)^2 from underflowing for tiny bases
        log_rhs = math.log(max(p, 1.0)) + math.log(max(cands)) + 2.0 * math.log(abs(a - b))
        log_lhs = math.log(abs(a - b)) + math.log(abs(_pow0(a, p) - _pow0(b, p)))
        first = log_lhs <= log_rhs + 1e-12
    second = None
    if p >= 1.0:
        l2 = _pow0(a, p) - _pow0(b, p)
        r2 = p * _pow0(b, p - 1.0) * (a - b)
        second = l2 >= r2 - 1e-12 * (abs(l2) + abs(r2)) - 1e-300
    return first, second
