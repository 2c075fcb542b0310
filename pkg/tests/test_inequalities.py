import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbl.hermite import GaussPoly, MonoPoly, to_hermite
from gbl.inequalities import (
    DegeneratePolynomialError,
    TrigPoly,
    bernstein_ratio,
    freud_sup_ratio,
    gaussian_abs_moment,
    generator_ratio,
    hermite_freud_ratios,
    loglog_slope,
    make_verdict,
    mrs_radius,
    real_up_to_phase,
    restricted_range_check,
    riesz_ratio_probe,
    verify_freud_1d,
    verify_freud_infty,
    verify_lustp,
    verify_mth02,
    verify_mth03,
    verify_mth04,
    verify_rot2,
    zygmund_trig_check,
)
from gbl.integration import NormResult
from gbl.lens import exp_gauge, power_gauge
from tests.test_hermite import gauss_polys


def H(n, c=1.0, k=1):
    return GaussPoly(k, {(n,) + (0,) * (k - 1): c})


def test_bernstein_ratio_examples():
    assert math.isclose(bernstein_ratio(H(5), 2), math.sqrt(5), rel_tol=1e-12)
    assert math.isclose(bernstein_ratio(H(1), 4), 3 ** -0.25, rel_tol=1e-12)
    assert bernstein_ratio(GaussPoly.constant(2.0), 3) == 0.0


def test_generator_ratio_examples():
    for p in (1.0, 1.5, 4.0):
        assert math.isclose(generator_ratio(GaussPoly(2, {(2, 1): 1}), p), 3, rel_tol=1e-9)
    P = GaussPoly(1, {(2,): 1, (0,): 1})
    assert math.isclose(generator_ratio(P, 2), 2 * math.sqrt(2) / math.sqrt(3), rel_tol=1e-12)


def test_zero_polynomial_raises():
    with pytest.raises(DegeneratePolynomialError):
        bernstein_ratio(GaussPoly.zero(1), 2)


def test_riesz_probe():
    assert math.isclose(riesz_ratio_probe(H(1), 3), 1 / gaussian_abs_moment(3), rel_tol=1e-9)
    with pytest.raises(DegeneratePolynomialError):
        riesz_ratio_probe(GaussPoly.constant(1.0), 2)


def test_gaussian_abs_moment():
    assert math.isclose(gaussian_abs_moment(2), 1.0)
    assert math.isclose(gaussian_abs_moment(1), math.sqrt(2 / math.pi))
    assert math.isclose(gaussian_abs_moment(4), 3 ** 0.25)


def test_mth03_and_mth02_on_single_frequency():
    v = verify_mth03(H(4), 2)
    assert v.ok and math.isclose(v.ratio, 0.1)
    w = verify_mth02(H(4), 2)
    assert math.isclose(w.ratio, 1.0, rel_tol=1e-12) and "rotation_ratio" in w.params


def test_freud_1d_requires_k1():
    assert verify_freud_1d(H(3), 3).ok
    with pytest.raises(ValueError):
        verify_freud_1d(H(1, k=2), 3)


def test_mth04_examples():
    assert verify_mth04(H(3), power_gauge(2)).ok
    assert verify_mth04(H(1, 0.3), exp_gauge()).label == "conditional"
    assert verify_mth04(H(2), exp_gauge()).status == "divergent"


def test_rot2_single_frequency_p2():
    ph1, ph2 = verify_rot2(H(4), 2)
    assert math.isclose(ph1.ratio, 0.5) and math.isclose(ph2.ratio, 0.25)


def test_rot2_ph2_equality_at_degree_one():
    # ||L H_1|| = ||H_1||: the bound holds with equality
    for p in (1.0, 1.5, 3.0):
        _, ph2 = verify_rot2(H(1), p)
        assert ph2.ok and ph2.conclusive and abs(ph2.ratio - 1) < 1e-9


def test_rot2_constant():
    ph1, ph2 = verify_rot2(GaussPoly.constant(3.0), 2)
    assert ph1.lhs == 0 and ph2.lhs == 0 and ph1.ok and ph2.ok


def test_lustp_examples():
    assert math.isclose(verify_lustp(H(3), 4).ratio, 0.5, rel_tol=1e-12)
    assert verify_lustp(GaussPoly(1, {(1,): 1, (9,): 1}), 2).ok
    assert verify_lustp(GaussPoly.constant(1.0), 2).status == "degenerate"


def test_freud_infty_oracle():
    v = verify_freud_infty(H(1))
    assert math.isclose(v.ratio, math.exp(0.5), rel_tol=1e-10)


def test_restricted_range_monomial_equality():
    for n in (2, 4, 6):
        P = to_hermite(MonoPoly(1, {(n,): 1}))
        v = restricted_range_check(P)
        assert v.ok and math.isclose(v.ratio, 1.0, rel_tol=1e-9)


def test_restricted_range_counterexample_at_half_radius():
    # |x^2 - 0.1| e^{-x^2} peaks outside |x| <= 1 but only at the MRS radius sqrt(n) is it contained
    P = to_hermite(MonoPoly(1, {(2,): 1, (0,): -0.1}))
    half = restricted_range_check(P, "half")
    assert not half.ok and math.isclose(half.ratio, 1.00537, rel_tol=1e-4)
    assert restricted_range_check(P, "mrs").ok


def test_mrs_radius():
    assert mrs_radius(8) == 2.0 and mrs_radius(4, "mrs") == 2.0
    with pytest.raises(ValueError):
        mrs_radius(4, "other")


def test_zygmund_equality_and_kinks():
    f = TrigPoly([0, 0, 0, 1], [0, 0, 0])
    v = zygmund_trig_check(f, 2)
    assert math.isclose(v.lhs, 9 * math.pi, rel_tol=1e-12) and math.isclose(v.ratio, 1.0)
    for p in (1, 3):
        assert math.isclose(zygmund_trig_check(f, p).ratio, 1.0, rel_tol=1e-10)
    assert zygmund_trig_check(TrigPoly([1.0], []), 2).ok


def test_trig_zeros():
    f = TrigPoly([0, 1], [0])  # cos t
    np.testing.assert_allclose(f.zeros(), [math.pi / 2, 3 * math.pi / 2], atol=1e-10)


def test_hermite_freud_slope_near_half():
    ns = list(range(2, 13))
    slope = loglog_slope(ns, hermite_freud_ratios(ns))
    assert abs(slope - 0.5) < 0.05
    assert math.isclose(freud_sup_ratio(H(1)), math.exp(0.5), rel_tol=1e-10)


def test_make_verdict_inconclusive():
    v = make_verdict("x", NormResult(1.0, "quadrature", 1e-3), 1.0)
    assert not v.conclusive and v.status == "inconclusive"
    assert make_verdict("x", 0.5, 1.0).status == "pass"
    assert make_verdict("x", 2.0, 1.0).status == "fail"


@settings(max_examples=25, deadline=None)
@given(gauss_polys(max_deg=4), st.sampled_from([1.5, 2.0, 4.0]), st.floats(0.1, 10))
def test_ratios_are_scale_invariant(P, p, c):
    if P.degree < 1:
        return
    a = bernstein_ratio(P, p)
    b = bernstein_ratio(P.scale(c * (1 + 1j)), p)
    assert math.isclose(a, b, rel_tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(gauss_polys(max_deg=5), st.sampled_from([1.0, 1.5, 2.0, 4.0, 6.0]))
def test_hard_bounds_hold(P, p):
    if P.degree < 1:
        return
    assert verify_mth03(P, p).ok
    assert verify_lustp(P, p).ok
    # ph1 in reduced form is only claimed for real P (up to a phase)
    assert all(v.ok or v.label == "complex" for v in verify_rot2(P, p))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.sampled_from([1.0, 2.0, 3.0, 4.0]),
)
def test_zygmund_property(a, b, p):
    f = TrigPoly(a, b)
    if max(map(abs, a[1:] + b)) < 1e-3:
        return
    assert zygmund_trig_check(f, p).ok


def test_rot2_ph1_complex_counterexample():
    # x1 + i x2: |grad P| = sqrt 2 is constant while P is a complex Gaussian,
    # so the reduced form exceeds 1 by (E|g|^p 2^{p/2} / E|Z|^p)^{1/p} for p > 2
    P = GaussPoly(2, {(1, 0): 1.0, (0, 1): 1j})
    ph1, _ = verify_rot2(P, 4.0)
    assert ph1.label == "complex" and math.isclose(ph1.ratio, 1.5**0.25, rel_tol=1e-10)
    real = GaussPoly(2, {(1, 0): 1j, (0, 1): 2j})
    assert verify_rot2(real, 4.0)[0].status == "pass"


def test_real_up_to_phase():
    assert real_up_to_phase([1.0, -2.0, 0.5])
    assert real_up_to_phase(np.array([1 + 1j, 2 + 2j]))
    assert not real_up_to_phase([1.0, 1j])
    assert real_up_to_phase([])
