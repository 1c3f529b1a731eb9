import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localbounds import constants as C
from localbounds.params import ProblemParams, RadiiChain, RegimeError, ball_volume, critical_exponents

CHAIN = RadiiChain(0.5, 1.0, 0.75)


# -- regime table -------------------------------------------------------------

# Rows written out by hand, independently of RESULTS_TABLE; the critical value p = p_c
# shares the supercritical row.
TABLE = {
    0.5: ("Yes", "Yes", "Yes", "No", "H_p", "lower", "upper"),
    1.0: ("Yes", "Yes", "Yes", "No", "H_1", "No", "upper"),
    2.0: ("Yes", "Yes", "Yes", "Yes", "H_p", "upper", "absolute"),
    3.0: ("Yes", "Yes", "Yes", "No", "H_p[u]", "No", "upper"),
    4.0: ("Yes", "Yes", "Yes", "No", "H_p[u]", "No", "upper"),
    5.0: ("No", "No", "No", "No", "No", "No", "No"),
    6.0: ("No", "No", "No", "No", "No", "No", "No"),
}
COLUMNS = ("upper", "upper_second_form", "lower", "lower_pc", "harnack", "absolute", "gradient")


@pytest.mark.parametrize("p", sorted(TABLE))
def test_table_of_results_d3(p):
    app = C.applicability(ProblemParams(3, p, 1.0))
    assert tuple(app[c].entry for c in COLUMNS) == TABLE[p]
    for c in COLUMNS:
        assert app[c].applicable == (app[c].entry != "No")
        if not app[c].applicable:
            assert app[c].reason.startswith("No")


def test_regime_tags():
    assert C.p_regime(ProblemParams(3, 0.0, 1)) == C.SUBLINEAR
    assert C.p_regime(ProblemParams(3, 1.0, 1)) == C.LINEAR
    assert C.p_regime(ProblemParams(3, 2.0, 1)) == C.SUBCRITICAL
    assert C.p_regime(ProblemParams(4, 2.0, 1)) == C.CRITICAL
    assert C.p_regime(ProblemParams(5, 2.0, 1)) == C.SUPERCRITICAL
    assert C.p_regime(ProblemParams(4, 3.0, 1)) == C.OUTSIDE


# -- Sobolev -----------------------------------------------------------------

def test_sobolev_override_and_dimension():
    assert C.sobolev_constant(3, 1.0) == 1.0
    s3, s4 = C.sobolev_constant(3), C.sobolev_constant(4)
    assert 0.0 < s4 < s3 < math.inf


def test_sobolev_default_is_the_optimal_whole_space_value():
    # independent closed form: S = [pi d (d-2)]^(-1/2) (Gamma(d)/Gamma(d/2))^(1/d)
    for d in (3, 4, 5, 7):
        ref = (math.pi * d * (d - 2)) ** -0.5 * (math.gamma(d) / math.gamma(d / 2)) ** (1 / d)
        assert C.sobolev_constant(d) == pytest.approx(ref, rel=1e-13)


# -- c1, k0, nudge ------------------------------------------------------------

def test_c1_above_critical_q():
    r = C.c1_and_k0(3, 1.0, 4.0)
    assert r.admissible and r.c1 == pytest.approx(4.0, rel=1e-15) and r.k0 is None


def test_c1_inadmissible_integer_ratio():
    assert not C.c1_and_k0(3, 1.0, 1.0).admissible


def test_k0_matches_brute_force_schedule():
    q = 1.0 / math.sqrt(3.0)
    beta = 2.0 * q / 6.0
    k = 0
    while 3.0 ** (k + 1) * beta < 1.0:
        k += 1
    assert C.c1_and_k0(3, 1.0, q).k0 == k == 1


@given(st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.floats(0.05, 8.0))
def test_nudge_returns_admissible(p, q):
    d = 3
    floor = d * max(p - 1.0, 0.0) / 2.0
    if q <= floor * (1 + 1e-3):
        return
    qh = C.nudge_q(d, p, q)
    assert floor < qh <= q
    assert C.c1_and_k0(d, p, qh).admissible
    if C.c1_and_k0(d, p, q).admissible:
        assert qh == q


def test_nudge_example():
    qh = C.nudge_q(3, 1.0, 1.0)
    assert 0.0 < qh < 1.0 and C.c1_and_k0(3, 1.0, qh).admissible


# -- upper constant ------------------------------------------------------------

def _upper_reference(d, p, lam, q, rho, s2):
    """Direct (non-log) evaluation of the upper-estimate constant."""
    pm = max(p - 1.0, 0.0)
    lam_p = lam / 4.0 if p == 1.0 else 2.0
    if q > d / (d - 2):
        c1 = (d - 2) * q / ((d - 2) * q - d)
    else:
        raise AssertionError("reference only covers q > d/(d-2)")
    om = ball_volume(d) ** (2.0 / d if p > 1 else 0.0)
    expo = d / (2 * q - d * pm)
    first = (c1 * s2**2 * om / (1 - rho) ** 2) ** expo
    inner = (d / (d - 2)) ** d * 2 * (d - 2) / (math.sqrt(d) - math.sqrt(d - 2)) ** 2
    br = lam_p + (d - 2) / q + (1 - rho) ** 2 * max((d - 2) / (d * q) ** 2 * abs(d * q - (d - 2)), 0.25)
    return first * (inner * br) ** expo


@pytest.mark.parametrize("d,p,lam,q", [(3, 1.0, 4.0, 4.0), (3, 2.0, 1.0, 4.0), (4, 0.5, 2.0, 3.0),
                                       (5, 2.0, 1.0, 6.0)])
def test_upper_constant_two_implementations(d, p, lam, q):
    s2 = C.sobolev_constant(d)
    ch = RadiiChain(0.5, 1.0)
    got = C.upper_I_inf(ProblemParams(d, p, lam), ch, q).value
    assert got == pytest.approx(_upper_reference(d, p, lam, q, 0.5, s2), rel=1e-12)


def test_upper_constant_decreasing_in_q():
    params = ProblemParams(3, 2.0, 1.0)
    qs = np.linspace(1.6, 10.0, 40)
    vals = [C.upper_I_inf(params, CHAIN, C.nudge_q(3, 2.0, float(q))).log_value for q in qs]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_upper_constant_blows_up_as_annulus_collapses():
    params = ProblemParams(3, 0.5, 1.0)
    vals = [C.upper_I_inf(params, RadiiChain(1.0 - e, 1.0), 4.0).log_value for e in (1e-1, 1e-3, 1e-6)]
    assert vals[0] < vals[1] < vals[2]


def test_upper_constant_guards():
    with pytest.raises(RegimeError):
        C.upper_I_inf(ProblemParams(3, 2.0, 1.0), CHAIN, 1.5)
    with pytest.raises(RegimeError):
        C.upper_I_inf(ProblemParams(3, 5.0, 1.0), CHAIN, 10.0)
    with pytest.raises(RegimeError):
        C.upper_I_inf(ProblemParams(3, 1.0, 1.0), CHAIN, 1.0)


# -- Caccioppoli and the unbounded-coefficient constants ----------------------

def test_caccioppoli_rhs():
    assert C.caccioppoli_rhs(3, 1.0, 0.5) == pytest.approx(128.0 * math.pi / 3.0, rel=1e-14)
    assert C.caccioppoli_rhs(4, 2.0, 1.0) == pytest.approx(4.0 * C.caccioppoli_rhs(4, 1.0, 0.5), rel=1e-14)
    assert C.caccioppoli_rhs(3, 1.0, 1.0 - 1e-9) > 1e18


def test_young_k1():
    assert C.young_K1(3.0, 3) == pytest.approx(0.75, rel=1e-15)
    lim = C.young_K1(math.inf, 3)
    assert C.young_K1(1e6, 3) == pytest.approx(lim, rel=1e-6)
    near = [C.young_K1(1.5 + e, 3) for e in (1e-3, 1e-5, 1e-7)]
    assert all(math.isfinite(v) and v >= 0.0 for v in near)


def test_reverse_poincare_k2():
    base = C.reverse_poincare_K2(1.0, 3.0, 3, 1.0, 0.0, (1.0, 2.0, 4.0))
    with_b = C.reverse_poincare_K2(1.0, 3.0, 3, 1.0, 2.0, (1.0, 2.0, 4.0))
    assert with_b > base > 0.0
    hi = C.reverse_poincare_K2(1.0, 3.0, 3, 1.0, 0.0, (1.0, 2.0, 8.0))
    assert hi > base


def test_moser_k3_limits():
    lim = C.moser_K3(2.0, math.inf, 3, 1.0, 0.5, 1.0).log_value
    assert C.moser_K3(2.0, 1e5, 3, 1.0, 0.5, 1.0).log_value == pytest.approx(lim, rel=1e-4)
    assert C.moser_K3(1.0 + 1e-9, 3.0, 3, 1.0, 0.5, 1.0).log_value > C.moser_K3(2.0, 3.0, 3, 1.0, 0.5, 1.0).log_value


def test_degiorgi_c():
    assert C.degiorgi_c(1.0, 0.5, 0.0) == pytest.approx(2.0, rel=1e-15)
    for a in (1.0, 2.0, 3.5):
        theta = 0.5
        lam = (0.75) ** (1.0 / a)
        assert C.degiorgi_c(a, lam, theta) <= 3.0 * (4.0 * a) ** a * (1 + 1e-12)


def test_extension_constant_increasing_in_k():
    vals = [C.extension_constant(4.0, 2.0, 1.0, 2.0, k, 1.0, 0.5).log_value for k in (0.5, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_a_constants_branches():
    R, ri = 1.0, 0.5
    a = C.a_constants(2.0, 3.0, 3, R, ri)
    assert math.exp(a.log_a2) == pytest.approx(16 * 5 + ((R - ri) / ri) ** 2, rel=1e-13)
    assert C.a_constants(1.0, 3.0, 3, R, ri).branch == "0<q0<=1"
    assert a.branch == "q0>1"


def test_second_form_bracket():
    params = ProblemParams(3, 2.0, 1.0)
    ch = RadiiChain(0.5, 1.0)
    zero = C.second_form_bracket(params, ch, 0.5, 3.0, 0.0)
    A = C.a_constants(0.5, 3.0, 3, 1.0, 0.5)
    assert zero.log_value == pytest.approx(A.log_a1 - 3 / 0.5 * math.log(0.5) + 3 / (2 * 0.5) * A.log_a2,
                                           rel=1e-14)
    vals = [C.second_form_bracket(params, ch, 0.5, 3.0, u).log_value for u in (0.1, 1.0, 10.0)]
    assert vals[0] < vals[1] < vals[2]
    # lambda enters the u-term with exponent d(p-1)/(2r-d(p-1)) = 1 here
    lam_exp = 3 * 1.0 / (2 * 3.0 - 3 * 1.0)
    assert lam_exp == 1.0
    with pytest.raises(RegimeError):
        C.second_form_bracket(params, ch, 0.5, 1.5, 1.0)


# -- lower constants -------------------------------------------------------------

def test_jn_constants_on_a_ball():
    d, R = 3, 0.7
    k = C.jn_constants(d, 2 * R, ball_volume(d) * R**d, 10.0)
    assert k.kappa0 == pytest.approx(d * ball_volume(d) * 10.0 / 2**d, rel=1e-14)
    assert C.jn_constants(d, 2.0, 1.0, 2 * math.e + 1e-9).kappa1 > 1e9
    assert C.jn_constants(d, 3.0, 1.0, 10.0).kappa1 > C.jn_constants(d, 2.0, 1.0, 10.0).kappa1


def test_q0_threshold():
    ref = 1.0 / (3.0 * (4.0 * math.pi / 3.0) ** 2 * (2.0 * math.e + 0.1))
    assert C.q0_threshold(3, 0.1) == pytest.approx(ref, rel=1e-14)
    ds = np.arange(1.0, 16.0 + 1e-9, 0.01)
    qs = [C.q0_threshold(float(d), 0.1) for d in ds]
    assert 5.0 < ds[int(np.argmin(qs))] < 6.0


@given(st.floats(1.0, 16.0), st.floats(1e-3, 10.0))
def test_q0_decreasing_in_eps(d, eps):
    assert C.q0_threshold(d, 2 * eps) < C.q0_threshold(d, eps)


def test_lower_constant_properties():
    vals = [C.lower_I(3, q, 0.1, 1.0, 0.5).log_value for q in (5e-4, 1e-3, 3e-3)]
    assert all(v < 0.0 for v in vals)
    assert vals[0] < vals[1] < vals[2]
    assert C.lower_I(3, 1e-3, 0.1, 1.0, 1e-6).log_value < C.lower_I(3, 1e-3, 0.1, 1.0, 0.5).log_value
    with pytest.raises(RegimeError):
        C.lower_I(3, 1.0, 0.1, 1.0, 0.5)


def test_rev_holder_constant():
    params = ProblemParams(3, 2.0, 1.0)
    v = C.rev_holder_I(params, 2.0, 2.0, 0.5, 1.0)
    assert v.params["branch"] == "upper" and v.log_value >= 0.0
    lo = C.rev_holder_I(params, 2.0, 0.5, 0.5, 1.0)
    assert lo.params["branch"] == "lower"
    assert C.rev_holder_I(params, 2.0, 2.0, 0.5, 1.0, s2=2.0).log_value > v.log_value
    with pytest.raises(RegimeError):
        C.rev_holder_I(params, 3.5, 1.0, 0.5, 1.0)


# -- Harnack, absolute, gradient ----------------------------------------------

def test_sublinear_n0():
    d = 3
    w = ball_volume(d)
    arg = math.log(math.e * (d - 1) * d * w**2 / 2 ** ((d - 3) / 2)) / math.log(d / (d - 2)) + 1.5
    first, closed, eps = C.sublinear_n0(d)
    assert closed == math.floor(arg)
    assert eps > 0.0
    h = C.harnack_sublinear(ProblemParams(3, 0.5, 1.0), CHAIN)
    assert h.q0 == pytest.approx((1 / 3) ** (first - 0.5), rel=1e-14)


def test_harnack_subcritical_structure():
    params = ProblemParams(3, 2.0, 1.0)
    h = C.harnack_subcritical(params, CHAIN)
    up = C.upper_I_inf(params, CHAIN, h.q_over)
    lo = C.lower_I(3, h.q_under, math.e, CHAIN.r0, CHAIN.r_inf)
    rh = C.rev_holder_I(params, h.q_over, h.q_under, CHAIN.r_bar, CHAIN.r0, variant="lower")
    expo = 2 * h.q_over / (2 * h.q_over - 3 * 1.0)
    assert h.log_value == pytest.approx(up.log_value + expo * (rh.log_value - lo.log_value), rel=1e-14)


def test_harnack_general_constant_stub_collapses():
    params = ProblemParams(5, 2.0, 1.0)
    c = 3.0
    w = C.ExponentWindow().resolve(params)
    q_over = C.nudge_q(5, 2.0, w.q_over)
    norms = C.HarnackNorms(c**q_over, c**1.0, c**q_over, c**w.q_under)
    h = C.harnack_general(params, CHAIN, norms, q_over, w.q_under, w.eps)
    ref = (C.upper_I_inf(params, CHAIN, q_over).log_value
           - C.lower_I(5, w.q_under, w.eps, CHAIN.r0, CHAIN.r_inf).log_value)
    assert h.log_value == pytest.approx(ref, rel=1e-12)


def test_harnack_dispatch():
    assert C.harnack_constant(ProblemParams(3, 0.5, 1), CHAIN).constant.name == "H_p"
    with pytest.raises(RegimeError):
        C.harnack_constant(ProblemParams(5, 2.0, 1), CHAIN)
    with pytest.raises(RegimeError):
        C.harnack_constant(ProblemParams(3, 5.0, 1), CHAIN)


def test_absolute_bounds():
    assert C.absolute_bounds(ProblemParams(3, 1.0, 1.0), CHAIN) == C.AbsoluteBounds(None, None, "No")
    ups = [C.absolute_bounds(ProblemParams(3, 2.0, lam), CHAIN).upper.log_value for lam in (0.5, 1, 4)]
    assert ups[0] > ups[1] > ups[2]
    los = [C.absolute_bounds(ProblemParams(3, 0.5, lam), CHAIN).lower.log_value for lam in (0.5, 1, 4)]
    assert los[0] < los[1] < los[2]


def test_absolute_upper_uses_the_harnack_constant_bit_for_bit():
    params = ProblemParams(3, 2.0, 1.0)
    h = C.harnack_constant(params, CHAIN)
    b = C.absolute_bounds(params, CHAIN)
    R, r0 = CHAIN.r_inf, CHAIN.r0
    base = math.log(8.0) + 3 * math.log(r0) - 0.0 - 2 * math.log(r0 - R) - 3 * math.log(R)
    assert b.upper.log_value == h.log_value + base / 1.0


def test_bp_bound():
    assert C.bp_bound(ProblemParams(3, 1.0, 1.0), CHAIN).value == 1.0
    assert C.bp_bound(ProblemParams(5, 2.0, 1.0), CHAIN, sup_norm=3.0).value == pytest.approx(3.0, rel=1e-14)
    with pytest.raises(RegimeError):
        C.bp_bound(ProblemParams(5, 2.0, 1.0), CHAIN)


def test_gradient_absolute_matches_hand_assembly():
    # the absolute gradient constant is the general one with b_p and ||u||_2 replaced by
    # their absolute bounds
    params = ProblemParams(3, 2.0, 1.0)
    ch = RadiiChain(0.5, 1.0, 0.75)
    h = C.harnack_subcritical(params, ch)
    bp = C.bp_bound(params, ch, harnack=h)
    K = C.gradient_K(params, ch, bp)
    up = C.absolute_bounds(params, ch, harnack=h).upper
    l2 = up.log_value + 0.5 * (math.log(ball_volume(3)) + 3 * math.log(ch.r0))
    absolute = C.gradient_K_absolute(params, ch, harnack=h)
    # the absolute form bounds sup over B_R0 by the ceiling on B_Rinf-sized balls, so it is
    # at least the hand assembly evaluated with the R_inf ceiling
    assert math.isfinite(absolute.log_value)
    assert absolute.log_value == pytest.approx(K.log_value + l2, rel=0.05)


# -- Moser schedule ------------------------------------------------------------

def test_beta_schedule_linear_d3():
    betas = C.beta_schedule(3, 1.0, 1.0, 8)
    assert betas == [3.0**n for n in range(9)]
    radii = C.radii_schedule(RadiiChain(1.0, 2.0), 3, 1.0, 1.0, 200)
    assert radii[0] - radii[-1] == pytest.approx(1.0, abs=1e-12)


def test_beta_limit():
    d, p, q = 3, 2.0, 4.0
    beta0 = 2 * q / 6.0
    lim = beta0 - 0.5 * (d - 2) * (p - 1)
    assert lim == pytest.approx(5.0 / 6.0, abs=1e-15)
    assert C.beta_closed_form(d, p, beta0, 60) * (1 / 3) ** 60 == pytest.approx(lim, rel=1e-12)
    rec = C.beta_schedule(d, p, beta0, 10)
    assert rec[10] == pytest.approx(C.beta_closed_form(d, p, beta0, 10), rel=1e-12)


# -- global properties ---------------------------------------------------------

def test_random_sample_finite_positive_or_typed_error():
    rng = np.random.default_rng(11)
    n_ok = 0
    for _ in range(10_000):
        d = int(rng.integers(3, 9))
        ex = critical_exponents(d)
        p = float(rng.choice([rng.uniform(0, 1), 1.0, rng.uniform(1, ex.p_s)]))
        lam = float(rng.uniform(0.1, 10))
        r0 = float(rng.uniform(0.1, 10))
        ch = RadiiChain(r0 * float(rng.uniform(0.05, 0.95)), r0)
        q = float(rng.uniform(0.1, 12))
        try:
            v = C.upper_I_inf(ProblemParams(d, p, lam), ch, q)
        except RegimeError:
            continue
        assert math.isfinite(v.log_value)
        n_ok += 1
    assert n_ok > 5000


@given(st.sampled_from([(3, 0.5), (3, 2.0), (4, 1.0), (5, 2.0)]), st.floats(1e-2, 1e2))
def test_scale_homogeneity(dp, factor):
    d, p = dp
    params = ProblemParams(d, p, 1.0)
    q = C.nudge_q(d, p, d * max(p - 1, 0) / 2 + 2.5)
    a = C.upper_I_inf(params, CHAIN, q).log_value
    b = C.upper_I_inf(params, CHAIN.scaled(factor), q).log_value
    assert b == pytest.approx(a, rel=1e-12, abs=1e-12)
    qq = C.q0_threshold(d, 0.1) / 2
    la = C.lower_I(d, qq, 0.1, CHAIN.r0, CHAIN.r_inf).log_value
    lb = C.lower_I(d, qq, 0.1, factor * CHAIN.r0, factor * CHAIN.r_inf).log_value
    assert lb == pytest.approx(la, rel=1e-12)


@given(st.floats(0.2, 1.0), st.floats(1.0, 5.0))
def test_monotone_in_sobolev_constant(s_lo, mult):
    s_hi = s_lo * mult
    p2 = ProblemParams(3, 2.0, 1.0)
    assert C.upper_I_inf(p2, CHAIN, 4.0, s_lo).log_value <= C.upper_I_inf(p2, CHAIN, 4.0, s_hi).log_value
    assert (C.harnack_subcritical(p2, CHAIN, s2=s_lo).log_value
            <= C.harnack_subcritical(p2, CHAIN, s2=s_hi).log_value)
    assert (C.harnack_sublinear(ProblemParams(3, 0.5, 1), CHAIN, s_lo).log_value
            <= C.harnack_sublinear(ProblemParams(3, 0.5, 1), CHAIN, s_hi).log_value)
    # lower constants carry S_2 with a negative power: larger S_2, smaller (weaker) lower bound
    assert C.lower_I(3, 1e-3, 0.1, 1.0, 0.5, s_hi).log_value <= C.lower_I(3, 1e-3, 0.1, 1.0, 0.5, s_lo).log_value
