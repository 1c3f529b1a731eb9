import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localbounds.cutoff import (CutoffProfile, cutoff_bounds, cutoff_energy_bound, cutoff_eval,
                                grad_sq_over_phi)
from localbounds.params import RegimeError
from localbounds.quadrature import cutoff_energy_integral

CUT = CutoffProfile(1.0, 2.0)


def test_values_at_knots():
    assert cutoff_eval(CUT, 1.0)[:2] == (1.0, 0.0)
    assert cutoff_eval(CUT, 1.5)[0] == pytest.approx(0.5, abs=1e-15)
    assert cutoff_eval(CUT, 2.0)[:2] == (0.0, 0.0)
    assert cutoff_eval(CUT, 0.0) == (1.0, 0.0, 0.0)
    assert cutoff_eval(CUT, 3.0) == (0.0, 0.0, 0.0)


def test_guards():
    with pytest.raises(RegimeError):
        CutoffProfile(2.0, 1.0)
    with pytest.raises(RegimeError):
        CutoffProfile(0.0, 1.0)
    with pytest.raises(RegimeError):
        cutoff_eval(CUT, -0.1)


def test_laplacian_matches_finite_differences():
    r = np.linspace(1.01, 1.99, 97)
    r = r[np.abs(r - 1.5) > 0.02]
    h = 1e-5
    phi = lambda x: cutoff_eval(CUT, x, 3)[0]
    d2 = (phi(r + h) - 2 * phi(r) + phi(r - h)) / h**2
    d1 = (phi(r + h) - phi(r - h)) / (2 * h)
    _, dphi, lap = cutoff_eval(CUT, r, 3)
    assert np.allclose(dphi, d1, atol=1e-8)
    assert np.allclose(lap, d2 + 2 * d1 / r, atol=1e-4)


def test_sup_gradient_exact_and_attained_at_midpoint():
    b = cutoff_bounds(CUT, 3)
    assert b.sup_grad == 2.0
    assert abs(cutoff_eval(CUT, 1.5)[1]) == pytest.approx(2.0, rel=1e-15)


def test_sup_laplacian_against_dense_grid():
    for d in (1, 2, 3, 5, 10):
        for r1, r0 in ((1.0, 2.0), (0.1, 5.0), (0.99, 1.0)):
            cp = CutoffProfile(r1, r0)
            g = np.union1d(np.linspace(r1, r0, 2_000_001), cp.knots)
            dense = float(np.max(np.abs(cutoff_eval(cp, g, d)[2])))
            # the sup sits at the midpoint knot, so the grid must contain it
            assert cutoff_bounds(cp, d).sup_lap == pytest.approx(dense, rel=1e-10)


def test_certified_scan():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        r0 = float(10 ** rng.uniform(-3, 3))
        r1 = r0 * float(rng.uniform(1e-4, 1 - 1e-4))
        d = int(rng.integers(1, 12))
        assert cutoff_bounds(CutoffProfile(r1, r0), d).certified


@given(st.floats(0.01, 0.99), st.floats(1e-2, 1e2))
def test_range_and_monotone(frac, r0):
    cp = CutoffProfile(frac * r0, r0)
    r = np.linspace(0.0, 1.5 * r0, 4001)
    phi, dphi, _ = cutoff_eval(cp, r)
    assert np.all((phi >= 0.0) & (phi <= 1.0))
    assert np.all(dphi <= 0.0)
    assert np.all(np.diff(phi) <= 1e-15)


@given(st.floats(0.01, 0.99), st.floats(1e-2, 1e2))
def test_derivative_continuous_at_knots(frac, r0):
    cp = CutoffProfile(frac * r0, r0)
    for k in cp.knots:
        e = 1e-9 * r0
        lo = cutoff_eval(cp, max(k - e, 0.0))[1]
        hi = cutoff_eval(cp, k + e)[1]
        assert abs(lo - hi) <= 1e-6 * cutoff_bounds(cp, 3).sup_grad


def test_grad_sq_over_phi_closed_form():
    r = np.linspace(1.0001, 1.9999, 1001)
    phi, dphi, _ = cutoff_eval(CUT, r)
    assert np.allclose(grad_sq_over_phi(CUT, r), dphi**2 / phi, rtol=1e-9)
    assert np.all(grad_sq_over_phi(CUT, np.array([1.6, 1.9, 1.999999])) == 8.0)


@pytest.mark.parametrize("d,r1,r0", [(3, 1.0, 2.0), (4, 0.5, 0.6), (5, 0.1, 3.0)])
def test_energy_bound(d, r1, r0):
    cp = CutoffProfile(r1, r0)
    q = cutoff_energy_integral(cp, d)
    assert q.value <= cutoff_energy_bound(cp, d)
    assert q.value > 0.0
