import math

import pytest

from localbounds import constants as C
from localbounds.params import ProblemParams, RadiiChain, RegimeError
from localbounds.radial import ConstantProfile
from localbounds.verify import (CHECK_NAMES, FAIL, INAPPLICABLE, INCONCLUSIVE, PASS, CheckResult, Fixture,
                                check_absolute, check_caccioppoli, check_caccioppoli_absolute,
                                check_energy_identity, check_gradient, check_gradient_absolute,
                                check_harnack, check_lower, check_lower_pc, check_rev_holder,
                                check_rev_holder_pc, check_upper, check_upper_second_form,
                                counterexample_singular, decide, make_fixture, moser_trace, run_checks,
                                summarize)


def P(d, p, lam=1.0):
    return ProblemParams(d, p, lam)


def _assert_pass(res):
    assert res.status == PASS, (res.name, res.status, res.log_margin, res.reason)
    assert res.margin >= 1.0


# -- decision rule --------------------------------------------------------------

def test_decide_bands():
    assert decide(0.0, 0.1, 0.0, 0.0, 1e-8) == PASS
    assert decide(0.0, -0.1, 0.0, 0.0, 1e-8) == FAIL
    assert decide(0.0, 1e-9, 0.0, 0.0, 1e-8) == INCONCLUSIVE
    assert decide(0.0, 0.05, 0.02, 0.0, 0.0) == INCONCLUSIVE
    # the allowance is capped: huge error bars never make 0.5x a pass
    assert decide(0.0, math.log(0.4), 10.0, 10.0, 0.0) == FAIL


def test_check_result_serialises():
    r = CheckResult("x", 0.0, math.log(2.0), 0.0, 0.0, PASS, "sublinear", "anchor")
    d = r.to_dict()
    assert d["margin"] == pytest.approx(2.0) and d["status"] == PASS
    huge = CheckResult("y", 0.0, 2000.0, 0.0, 0.0, PASS, "sublinear", "anchor").to_dict()
    assert huge["margin"] is None and huge["log10_margin"] == pytest.approx(2000 / math.log(10))


# -- energy identity and Caccioppoli ----------------------------------------------

@pytest.mark.parametrize("alpha,delta", [(1.0, 0.0), (-2.0, 0.1), (2.0, 0.1)])
def test_energy_identity_passes_on_solutions(alpha, delta):
    for fx in (make_fixture(P(3, 0.0, 2.0)), make_fixture(P(3, 1.0)), make_fixture(P(3, 2.0))):
        assert check_energy_identity(fx, alpha, delta).status == PASS


def test_energy_identity_fails_on_perturbation():
    fx = make_fixture(P(3, 0.0, 2.0), perturbation=0.1)
    assert check_energy_identity(fx, 1.0, 0.0).status == FAIL


def test_caccioppoli_p0():
    _assert_pass(check_caccioppoli(make_fixture(P(3, 0.0)), 0.0))


def test_caccioppoli_absolute_on_singular():
    fx = make_fixture(P(5, 2.0), kind="singular")
    _assert_pass(check_caccioppoli_absolute(fx))


def _stub_fixture(c=2.0):
    params = P(3, 2.0)
    prof = ConstantProfile(3, c, r_max=1.0, params=params)
    return Fixture("constant-stub", params, prof, RadiiChain.from_scale(1.0), c)


def test_constant_stub_guards():
    fx = _stub_fixture()
    assert check_caccioppoli(fx, 0.0).status == INAPPLICABLE
    assert check_upper(fx).status == INAPPLICABLE
    assert "not a solution" in check_caccioppoli(fx, 0.0).reason


def test_rev_holder_constant_stub_margin_is_the_factor():
    fx = _stub_fixture(3.0)
    eps, d = 0.1, 3
    q = C.q0_threshold(d, eps)
    res = check_rev_holder(fx, q, 0.0, eps)
    # the factor is below 1e-300 here, so compare logs
    log_factor = 2 / q * math.log(eps / (2**d * (math.e * d + eps)))
    assert res.log_margin == pytest.approx(-log_factor, rel=1e-12)
    assert res.status == PASS


def test_delta_limit_coherence():
    fx = make_fixture(P(3, 0.5))
    m = {dl: check_caccioppoli(fx, dl).log_margin for dl in (1.0, 0.1, 0.01, 0.0)}
    gaps = [abs(m[dl] - m[0.0]) for dl in (1.0, 0.1, 0.01)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.05


# -- upper estimates -------------------------------------------------------------

def test_upper_p1_closed_form_chain():
    fx = make_fixture(P(3, 1.0), chain=RadiiChain(1.0, 2.0))
    _assert_pass(check_upper(fx, 2.0))


def test_upper_p2_and_larger_q():
    fx = make_fixture(P(3, 2.0))
    for q in (4.0, 6.0, 10.0):
        _assert_pass(check_upper(fx, q))


def test_upper_second_form():
    fx = make_fixture(P(3, 2.0))
    _assert_pass(check_upper_second_form(fx, 0.5, 3.0))
    _assert_pass(check_upper_second_form(fx, 2.0, 3.0))


def test_upper_second_form_singular_guard():
    fx = make_fixture(P(5, 2.0), kind="singular")
    res = check_upper_second_form(fx, 0.5, 2.0)
    assert res.status == INAPPLICABLE and "r_over" in res.reason


def test_upper_p_ge_ps_inapplicable():
    fx = make_fixture(P(3, 5.0))
    assert check_upper(fx).status == INAPPLICABLE


# -- lower estimates ------------------------------------------------------------

def test_lower_p1():
    fx = make_fixture(P(3, 1.0))
    _assert_pass(check_lower(fx, C.q0_threshold(3, 0.1) / 2, 0.1))


def test_lower_pc_and_two_exponent_reverse_holder():
    fx = make_fixture(P(3, 2.0))
    _assert_pass(check_lower_pc(fx, 2.0))
    _assert_pass(check_rev_holder_pc(fx, 2.0))


def test_lower_pc_inapplicable_outside_window():
    assert check_lower_pc(make_fixture(P(3, 0.5))).status == INAPPLICABLE


def test_chain_must_stay_inside_positivity():
    with pytest.raises(RegimeError):
        make_fixture(P(3, 0.0, 2.0), chain=RadiiChain(0.5, math.sqrt(3.0)))


@pytest.mark.parametrize("dp", [(3, 0.0), (3, 0.5), (3, 1.0), (3, 2.0), (4, 1.5)])
def test_rev_holder_delta_uniform(dp):
    fx = make_fixture(P(*dp))
    for dl in (0.0, 1.0):
        _assert_pass(check_rev_holder(fx, None, dl, 0.1))


# -- Harnack and absolute bounds --------------------------------------------------

def test_harnack_sublinear_and_subcritical():
    _assert_pass(check_harnack(make_fixture(P(3, 0.5))))
    _assert_pass(check_harnack(make_fixture(P(3, 2.0))))


def test_harnack_constant_independent_of_solution():
    small = make_fixture(P(3, 2.0), u0=5.0)
    big = make_fixture(P(3, 2.0), u0=1.0, chain=small.chain)
    a, b = check_harnack(small), check_harnack(big)
    _assert_pass(a)
    _assert_pass(b)
    assert a.details["log10_H"] == b.details["log10_H"]
    assert not a.details["u_dependent"]


def test_harnack_general_regime_is_u_dependent():
    res = check_harnack(make_fixture(P(3, 4.0)))
    _assert_pass(res)
    assert res.details["u_dependent"]


def test_harnack_singular_inapplicable():
    assert check_harnack(make_fixture(P(5, 2.0), kind="singular")).status == INAPPLICABLE


def test_absolute_ceiling_shared():
    hi = make_fixture(P(3, 2.0), u0=10.0)
    lo = make_fixture(P(3, 2.0), u0=1.0, chain=hi.chain)
    a, b = check_absolute(hi), check_absolute(lo)
    _assert_pass(a)
    _assert_pass(b)
    assert a.details["log10_bound"] == b.details["log10_bound"] and a.details["side"] == "upper"


def test_absolute_floor_shared():
    # for p < 1 the positivity radius grows with u0, so the shared chain comes from u0 = 1
    lo = make_fixture(P(3, 0.5), u0=1.0)
    hi = make_fixture(P(3, 0.5), u0=10.0, chain=lo.chain)
    a, b = check_absolute(hi), check_absolute(lo)
    _assert_pass(a)
    _assert_pass(b)
    assert a.details["side"] == "lower" and a.details["log10_bound"] == b.details["log10_bound"]


def test_absolute_p1_inapplicable():
    res = check_absolute(make_fixture(P(3, 1.0)))
    assert res.status == INAPPLICABLE and res.reason.startswith("No")


# -- gradient -----------------------------------------------------------------------

def test_gradient_p0_closed_lhs():
    fx = make_fixture(P(3, 0.0, 2.0))
    res = check_gradient(fx)
    _assert_pass(res)
    assert res.lhs == pytest.approx(2.0 * fx.chain.r_inf / 3.0, rel=1e-10)


def test_gradient_p2_both_bounds():
    fx = make_fixture(P(3, 2.0))
    _assert_pass(check_gradient(fx))
    _assert_pass(check_gradient_absolute(fx))


def test_gradient_p4_general():
    fx = make_fixture(P(3, 4.0))
    _assert_pass(check_gradient(fx))
    assert check_gradient_absolute(fx).status == INAPPLICABLE


# -- Moser trace and counterexamples --------------------------------------------------

def test_moser_trace_p1():
    out = moser_trace(make_fixture(P(3, 1.0)), n_max=6)
    steps = [r for r in out if r.name.startswith("moser_step")]
    assert len(steps) == 6
    for r in steps:
        _assert_pass(r)
    lim = out[-1]
    assert lim.name == "moser_beta_limit" and lim.status == PASS


def test_moser_radii_telescope():
    fx = make_fixture(P(3, 1.0))
    lim = moser_trace(fx, n_max=1)[-1]
    assert lim.details["partial_gap_sum"] <= fx.chain.r0 - fx.chain.r_inf + 1e-12


@pytest.mark.parametrize("d,p,thr", [(5, 2.0, 2.5), (4, 2.5, 3.0), (3, 4.0, 4.5)])
def test_counterexample(d, p, thr):
    res = counterexample_singular(P(d, p))
    assert res.status == PASS
    assert res.details["threshold"] == thr
    assert res.details["classification"][f"{thr:g}"] == "divergent"
    assert res.details["relative_residual"] <= 1e-10


def test_counterexample_outside_window():
    assert counterexample_singular(P(3, 2.0)).status == INAPPLICABLE


# -- runner --------------------------------------------------------------------------

def test_run_checks_all_names_and_no_fail():
    fx = make_fixture(P(3, 2.0))
    res = run_checks(fx)
    assert {r.name.split("[")[0] for r in res} >= set(CHECK_NAMES) - {"counterexample_singular",
                                                                      "moser_trace"}
    s = summarize(res)
    assert s[FAIL] == 0 and s[INCONCLUSIVE] == 0
    for r in res:
        if r.status == INAPPLICABLE:
            assert r.reason


def test_run_checks_rejects_unknown():
    with pytest.raises(ValueError):
        run_checks(make_fixture(P(3, 0.0)), ["nope"])


def test_outside_range_everything_but_energy_inapplicable():
    res = run_checks(make_fixture(P(3, 5.0, 3.0)))
    for r in res:
        if r.name.startswith("energy_identity"):
            assert r.status == PASS
        else:
            assert r.status == INAPPLICABLE and r.reason
