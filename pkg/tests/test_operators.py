import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbl.hermite import GaussPoly, MonoPoly, to_hermite, to_monomial
from gbl.operators import (
    FlowPoint,
    double_factorial,
    gaussian_smooth,
    mehler,
    ou_generator,
    ou_generator_calculus,
    sqrt_minus_L,
)
from tests.test_hermite import gauss_polys


def test_generator_eigenvalues():
    P = GaussPoly(2, {(2, 1): 1.0, (0, 0): 3.0})
    assert ou_generator(P) == GaussPoly(2, {(2, 1): -3.0})


def test_sqrt_minus_L_squares_to_minus_L():
    P = GaussPoly(1, {(4,): 2.0, (1,): 1j})
    assert sqrt_minus_L(sqrt_minus_L(P)).allclose(ou_generator(P).scale(-1))


def test_mehler_on_single_frequency():
    z = 0.3 + 0.4j
    assert mehler(GaussPoly(1, {(3,): 1}), z).allclose(GaussPoly(1, {(3,): z**3}))


def test_mehler_at_one_is_identity():
    P = GaussPoly(2, {(1, 1): 2.0, (3, 0): -1j})
    assert mehler(P, 1) == P


def test_double_factorial():
    assert [double_factorial(n) for n in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]


def test_flow_point_validates():
    with pytest.raises(ValueError):
        FlowPoint(1.5, 0.5)


def test_smoothing_of_square():
    # E(u + z x + xi)^2 = (u + z x)^2 - tau with tau = s + z^2 (1 - s)
    G = gaussian_smooth(MonoPoly(1, {(2,): 1}), FlowPoint(0.3, 0.5))
    expected = MonoPoly(2, {(0, 2): 1, (1, 1): 1, (2, 0): 0.25, (0, 0): -(0.3 + 0.25 * 0.7)})
    assert G.allclose(expected)


@settings(max_examples=50, deadline=None)
@given(gauss_polys(max_deg=5))
def test_calculus_generator_matches_diagonal(P):
    via_calculus = to_hermite(ou_generator_calculus(to_monomial(P)))
    assert via_calculus.allclose(ou_generator(P), rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    gauss_polys(max_deg=4),
    st.complex_numbers(max_magnitude=1),
    st.complex_numbers(max_magnitude=1),
)
def test_mehler_semigroup(P, a, b):
    assert mehler(mehler(P, a), b).allclose(mehler(P, a * b), rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(gauss_polys(k=1, max_deg=4), st.floats(0.0, 3.0))
def test_mehler_real_time_is_ou_semigroup(P, t):
    # T_{e^{-t}} = exp(tL) on the Hermite basis
    expected = GaussPoly(1, {a: cmath.exp(-t * sum(a)) * c for a, c in P.coeffs.items()})
    assert mehler(P, np.exp(-t)).allclose(expected, rtol=1e-9)
