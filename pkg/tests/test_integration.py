import math

import numpy as np
import pytest
from hypothesis import given, settings

from gbl.hermite import GaussPoly, MonoPoly, multi_indices, to_hermite
from gbl.integration import (
    NormResult,
    QuadratureBudgetError,
    batch_moments,
    coefficient_tensors,
    exact_node_count,
    expectation,
    gauss_hermite_rule,
    grad_lp_norm,
    lp_norm,
    monte_carlo_lp,
    weighted_sup_norm,
)
from gbl.operators import sqrt_minus_L
from tests.test_hermite import gauss_polys

# values computed independently with mpmath quadrature at 30 digits
ORACLE_H1_P3 = 1.1685752549624655486704760111
ORACLE_H2_P15 = 1.16397033146758115467997852592
ORACLE_H2_PLUS_2I_H1_P3 = 3.03658897187566251942080957851
ORACLE_AFFINE_P1 = 0.833522484234419750981818881272  # ||0.3 + x||_1
ORACLE_RADIAL_P3 = 1.55498808066965724284748518685  # ||x1 + i x2||_3
ORACLE_GRAD_H2_P15 = 1.80873839807324093136199895836
ORACLE_SUP_H2_PHI = 0.398942280401432677939946059934
ORACLE_SUP_GRAD_X3_PHI = 0.880575979042439399365886574189


def H(*alpha, c=1.0):
    return GaussPoly(len(alpha), {tuple(alpha): c})


def test_gh_two_nodes():
    rule = gauss_hermite_rule(2)
    np.testing.assert_allclose(rule.nodes, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [0.5, 0.5], atol=1e-15)


def test_gh_moment_of_x14():
    rule = gauss_hermite_rule(8)
    assert math.isclose(rule.integrate(lambda x: x[..., 0] ** 14), 135135.0, rel_tol=1e-12)


def test_exact_node_count():
    assert exact_node_count(4, 3) == 7


def test_even_p_is_exact():
    r = lp_norm(H(1), 4)
    assert r.mode == "exact" and r.error_estimate == 0.0
    assert math.isclose(r.value, 3 ** 0.25, rel_tol=1e-13)


@pytest.mark.parametrize(
    "P, p, expected",
    [
        (H(1), 3.0, ORACLE_H1_P3),
        (H(2), 1.5, ORACLE_H2_P15),
        (GaussPoly(1, {(2,): 1, (1,): 2j}), 3.0, ORACLE_H2_PLUS_2I_H1_P3),
        (GaussPoly(1, {(0,): 0.3, (1,): 1}), 1.0, ORACLE_AFFINE_P1),
        (GaussPoly(2, {(1, 0): 1, (0, 1): 1j}), 3.0, ORACLE_RADIAL_P3),
    ],
)
def test_non_even_norms_against_oracle(P, p, expected):
    r = lp_norm(P, p)
    assert r.mode == "quadrature"
    assert abs(r.value - expected) <= 1e-9 * expected


def test_gradient_norm_against_oracle():
    assert math.isclose(grad_lp_norm(H(2), 1.5).value, ORACLE_GRAD_H2_P15, rel_tol=1e-10)


def test_constant_polynomial_norm():
    assert lp_norm(GaussPoly.constant(2.0, 3), 1.5).value == 2.0
    assert grad_lp_norm(GaussPoly.constant(2.0, 3), 1.5).value == 0.0


def test_p_below_one_needs_flag():
    with pytest.raises(ValueError):
        lp_norm(H(1), 0.5)
    r = lp_norm(H(1), 0.5, experimental=True)
    # E|g|^{1/2} = 2^{1/4} Gamma(3/4) / sqrt(pi)
    expected = (2**0.25 * math.gamma(0.75) / math.sqrt(math.pi)) ** 2
    assert math.isclose(r.value, expected, rel_tol=1e-8)


def test_budget_error():
    with pytest.raises(QuadratureBudgetError):
        lp_norm(GaussPoly(3, {(8, 8, 8): 1, (1, 1, 1): 1}), 4, budget=1000)


def test_norm_result_contract():
    with pytest.raises(ValueError):
        NormResult(1.0, "exact", 0.1)
    with pytest.raises(ValueError):
        NormResult(1.0, "quadrature", 0.0)


def test_expectation_with_gauge_number():
    assert math.isclose(expectation(H(1), 4).value, 3.0, rel_tol=1e-13)


def test_monte_carlo_agrees_loosely():
    mean, se = monte_carlo_lp(H(1), 3, samples=200_000, seed=1)
    assert abs(mean - ORACLE_H1_P3**3) < 5 * se


def test_weighted_sup_norms():
    assert math.isclose(weighted_sup_norm(H(2)), ORACLE_SUP_H2_PHI, rel_tol=1e-12)
    x3 = to_hermite(MonoPoly(1, {(3,): 1}))
    assert math.isclose(weighted_sup_norm(x3, gradient=True), ORACLE_SUP_GRAD_X3_PHI, rel_tol=1e-12)
    # P = x: sup |x| phi(x) = phi(1)
    assert math.isclose(weighted_sup_norm(H(1)), math.exp(-0.5) / math.sqrt(2 * math.pi), rel_tol=1e-12)


def test_weighted_sup_norm_2d_separable():
    # |x1 x2| phi(x1) phi(x2) peaks at |x1| = |x2| = 1
    got = weighted_sup_norm(H(1, 1))
    assert math.isclose(got, (math.exp(-0.5) / math.sqrt(2 * math.pi)) ** 2, rel_tol=1e-8)


def test_batch_moments_match_single_path():
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    C = coefficient_tensors(coeffs, 2, 2)
    vals, errs, exact = batch_moments(C, 4)
    assert exact
    for row, v in zip(coeffs, vals):
        P = GaussPoly.from_dense(2, multi_indices(2, 2), row)
        assert math.isclose(v ** 0.25, lp_norm(P, 4).value, rel_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(gauss_polys(max_deg=4))
def test_p2_norm_is_parseval(P):
    if P.is_zero():
        return
    assert math.isclose(lp_norm(P, 2).value, P.parseval_norm2(), rel_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(gauss_polys(max_deg=4))
def test_gradient_and_riesz_agree_at_p2(P):
    if P.degree < 1:
        return
    a = grad_lp_norm(P, 2).value
    b = lp_norm(sqrt_minus_L(P), 2).value
    assert math.isclose(a, b, rel_tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(gauss_polys(max_deg=3))
def test_norms_increase_with_p(P):
    if P.is_zero():
        return
    n1, n2, n4 = (lp_norm(P, p).value for p in (1.5, 2, 4))
    assert n1 <= n2 * (1 + 1e-7) and n2 <= n4 * (1 + 1e-9)


def test_unused_coordinates_integrate_out():
    P1 = GaussPoly(1, {(2,): 1.0, (0,): 0.3})
    P3 = GaussPoly(3, {(0, 2, 0): 1.0, (0, 0, 0): 0.3})
    assert math.isclose(lp_norm(P3, 1.5).value, lp_norm(P1, 1.5).value, rel_tol=1e-12)


def test_single_term_factorizes():
    # ||H1(x1) H2(x2)||_3 = ||H1||_3 ||H2||_3 against the frozen one-dimensional values
    P = GaussPoly(2, {(1, 2): -2.0})
    H1, H2 = GaussPoly(1, {(1,): 1.0}), GaussPoly(1, {(2,): 1.0})
    expected = 2 * lp_norm(H1, 3).value * lp_norm(H2, 3).value
    assert math.isclose(lp_norm(P, 3).value, expected, rel_tol=1e-12)
    assert math.isclose(lp_norm(H1, 3).value, ORACLE_H1_P3, rel_tol=1e-10)
