import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbl.flow import (
    FlowTrace,
    LensContractError,
    flow_value,
    hyp3_check,
    inf1_check,
    inf1_form,
    monotonicity_scan,
    necessity_witness,
)
from gbl.hermite import GaussPoly
from gbl.integration import expectation
from gbl.lens import LensDomain, in_lens, power_gauge
from gbl.operators import mehler

P_SAMPLE = GaussPoly(1, {(0,): 0.5, (1,): 1 - 0.5j, (3,): 0.3j})
P_2D = GaussPoly(2, {(1, 0): 1.0, (1, 1): 0.5j, (0, 2): -0.25})


@pytest.mark.parametrize("P", [P_SAMPLE, P_2D])
def test_flow_endpoints(P):
    g = power_gauge(4)
    z = 0.4 + 0.2j
    r0 = flow_value(P, g, z, 0.0).value
    r1 = flow_value(P, g, z, 1.0).value
    assert math.isclose(r0, expectation(mehler(P, z), g).value, rel_tol=1e-10)
    assert math.isclose(r1, expectation(P, g).value, rel_tol=1e-10)


def test_flow_is_monotone_inside_the_lens():
    trace = monotonicity_scan(P_2D, power_gauge(6), 0.3 + 0.3j)
    assert trace.monotone and len(trace.rows()) == 16


def test_flow_trace_validates_grid():
    with pytest.raises(ValueError):
        FlowTrace(np.array([0.0, 0.0]), np.array([1.0, 1.0]), 0.0, 0.5, "x")
    with pytest.raises(ValueError):
        monotonicity_scan(P_SAMPLE, power_gauge(4), 0.5, grid_size=8)


def test_flow_refuses_k3():
    with pytest.raises(ValueError):
        flow_value(GaussPoly(3, {(1, 0, 0): 1}), power_gauge(4), 0.5, 0.5)


def test_inf1_form_at_p2_is_radial():
    # R(x) = x: the form reduces to (1 - |z|^2)|w|^2
    g = power_gauge(2)
    val = inf1_form(g, 0.6j, 2.0, 1 + 1j)
    assert math.isclose(float(val), (1 - 0.36) * 2)


def test_inf1_matches_lens_away_from_boundary():
    for p in (1.5, 3.0, 4.0, 8.0):
        g = power_gauge(p)
        lens = LensDomain.from_gauge(g)
        for z in (0.0, 0.5, -0.7, 0.3j, 0.8j, 0.5 + 0.5j, 0.95):
            margin = lens.radius - max(abs(z - 1j * lens.center_offset), abs(z + 1j * lens.center_offset))
            if abs(margin) > 1e-6:
                assert inf1_check(g, z).ok == in_lens(z, lens)


def test_necessity_witness_reproduces_violation():
    w = necessity_witness(power_gauge(4), 0.9j)
    assert w.ok and w.margin > 0
    w2 = necessity_witness(power_gauge(2), 1.001)
    assert w2.ok


def test_necessity_refuses_points_in_the_lens():
    with pytest.raises(ValueError):
        necessity_witness(power_gauge(4), 0.1)


def test_hyp3_inside_lens():
    g = power_gauge(4)
    res = hyp3_check(P_SAMPLE, g, 0.5 + 0.3j)
    assert res.ok and res.mode == "exact"


def test_hyp3_contract():
    with pytest.raises(LensContractError):
        hyp3_check(P_SAMPLE, power_gauge(4), 0.95j)


def test_hyp3_non_even_gauge():
    res = hyp3_check(P_SAMPLE, power_gauge(3), 0.4 - 0.2j)
    assert res.ok and res.conclusive and res.mode == "quadrature"


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_hyp3_property_p4(a, b, x, y):
    g = power_gauge(4)
    lens = LensDomain.from_gauge(g)
    z = complex(x, y)
    if not in_lens(z, lens):
        return
    P = GaussPoly(1, {(0,): a, (1,): 1.0, (2,): b * 1j})
    assert hyp3_check(P, g, z, lens).ok
