import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbl.lens import (
    GaugeError,
    LensDomain,
    check_gauge,
    conformal_map,
    estimate_gauge_constant,
    exp_gauge,
    gauge_constant,
    generator_exponent,
    grad_exponent,
    in_lens,
    in_lens_algebraic,
    lens_sup_norm,
    markov_at_one,
    moment_measure,
    polynomial_gauge,
    power_gauge,
    psd_everywhere,
    technical_bound,
)


def test_power_gauge_constant_closed_form():
    assert gauge_constant(power_gauge(2)) == 2.0
    assert math.isclose(gauge_constant(power_gauge(4)), 10 / 3)


@pytest.mark.parametrize("p", [1.5, 3.0, 4.0, 8.0])
def test_grid_estimate_matches_closed_form(p):
    c, delta = estimate_gauge_constant(power_gauge(p))
    assert math.isclose(c, ((p - 1) ** 2 + 1) / (p - 1), rel_tol=1e-9)
    assert delta >= 0


def test_power_gauge_needs_p_above_one():
    with pytest.raises(GaugeError):
        power_gauge(1.0)


def test_exp_gauge_is_conditional():
    g = exp_gauge()
    assert g.conditional
    # sB''/B' = s on (0.1, 10): the sup of s + 1/s is at the endpoint 10
    assert math.isclose(gauge_constant(g), 10.1, rel_tol=1e-9)


def test_quartic_gauge_constant():
    # B = s^2 + s^4: A = (2 + 12 s^2)/(2 + 4 s^2), A + 1/A tends to 3 + 1/3
    c = gauge_constant(polynomial_gauge(((1.0, 2.0), (1.0, 4.0))))
    assert 2.0 < c <= 10 / 3 + 1e-9


def test_bad_gauge_rejected():
    g = power_gauge(3)
    broken = type(g)(**{**g.__dict__, "d2": lambda s: -np.ones_like(s)})
    with pytest.raises(GaugeError):
        check_gauge(broken)


def test_lens_geometry_p4():
    lens = LensDomain.for_power(4)
    assert math.isclose(lens.alpha, 4 / 3)
    assert math.isclose(lens.alpha, generator_exponent(4))
    assert in_lens(1.0, lens) and in_lens(-1.0, lens)
    assert in_lens(0.0, lens)
    assert not in_lens(0.99j, lens)


def test_disk_lens_at_p2():
    lens = LensDomain.for_power(2)
    assert lens.is_disk and lens.alpha == 1.0
    assert in_lens(0.999j, lens) and not in_lens(1.001, lens)


def test_exponents():
    assert grad_exponent(2) == 0.5 and generator_exponent(2) == 1.0
    assert grad_exponent(1) == 1.0 and generator_exponent(1) == 2.0
    assert math.isclose(grad_exponent(4), 2 / 3)
    assert abs(grad_exponent(1e6) - 1) < 1e-3
    with pytest.raises(ValueError):
        grad_exponent(0.5)


def test_psd_matches_lens_on_axis_points():
    g = power_gauge(4)
    lens = LensDomain.from_gauge(g)
    for z in (0.5, 0.2j, 0.9j, -0.3 + 0.1j):
        assert psd_everywhere(g, z) == in_lens(z, lens)


@pytest.mark.parametrize("c", [2.5, 10 / 3, 10.0])
def test_conformal_map_sends_boundary_to_circle(c):
    lens = LensDomain.from_constant(c)
    tau = np.linspace(0.01, 1.99, 200)
    w = lens.boundary(tau)
    assert np.max(np.abs(np.abs(conformal_map(w, lens)) - 1)) < 1e-9


def test_conformal_map_corner_and_interior():
    lens = LensDomain.from_constant(10 / 3)
    assert conformal_map(1.0, lens) == 1.0
    with pytest.raises(ValueError):
        conformal_map(0.0, lens)
    # far field: the map grows linearly
    assert abs(conformal_map(1e6, lens)) > 1e5


def test_markov_corner_examples():
    lens = LensDomain.from_constant(2.0)
    # P = z^n on the unit disk: |P'(1)| = n, sup = 1
    chk = markov_at_one([0, 0, 0, 0, 1], lens)
    assert math.isclose(chk.lhs, 4) and math.isclose(chk.rhs, 40, rel_tol=1e-9) and chk.ok


def test_lens_sup_norm_constant():
    assert lens_sup_norm([2.0], LensDomain.from_constant(10.0)) == 2.0


def test_technical_bound_rejects_bad_parameters():
    assert technical_bound(1.5, 0.05).ok
    with pytest.raises(ValueError):
        technical_bound(0.5, 0.05)
    with pytest.raises(ValueError):
        technical_bound(1.5, 0.2)


@pytest.mark.parametrize("c", [2.0, 10 / 3])
def test_moment_measure_reproduces_derivative(c):
    lens = LensDomain.from_constant(c)
    mu = moment_measure(6, lens)
    assert mu.residual <= 1e-8
    coeffs = np.array([1, -2j, 0.5, 3, 0, 1, -1])
    assert abs(mu.apply(coeffs) - np.arange(7) @ coeffs) < 1e-6
    assert mu.tv_exact <= 10 * 6**lens.alpha


def test_disk_moment_measure_total_variation_near_n():
    # on the disk the minimal measure for P'(1) has mass close to n
    mu = moment_measure(8, LensDomain.from_constant(2.0))
    assert 8.0 <= mu.tv_exact <= 8.1


@settings(max_examples=200, deadline=None)
@given(st.floats(2.0, 50.0), st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_membership_forms_agree(c, x, y):
    lens = LensDomain.from_constant(c)
    z = complex(x, y)
    m = float(np.asarray(in_lens(z, lens)))
    if abs(float(lens.radius - max(abs(z - 1j * lens.center_offset), abs(z + 1j * lens.center_offset)))) > 1e-9:
        assert bool(m) == bool(in_lens_algebraic(z, lens))


@settings(max_examples=100, deadline=None)
@given(st.floats(2.0, 100.0), st.floats(2.0, 100.0))
def test_lenses_shrink_as_c_grows(c1, c2):
    a, b = sorted((c1, c2))
    la, lb = LensDomain.from_constant(a), LensDomain.from_constant(b)
    assert la.alpha <= lb.alpha + 1e-15
    pts = lb.boundary(np.linspace(0, 2, 64, endpoint=False))
    assert np.all(in_lens(pts * (1 - 1e-9), la))
