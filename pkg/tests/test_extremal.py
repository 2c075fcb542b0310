import math

import pytest

from gbl.extremal import extremal_search, random_probe_max
from gbl.hermite import GaussPoly
from gbl.inequalities import bernstein_ratio, generator_ratio
from gbl.lens import grad_exponent


@pytest.mark.parametrize("k, n", [(1, 3), (2, 4), (3, 2)])
def test_spectral_oracle_at_p2(k, n):
    g = extremal_search(k, n, 2.0, restarts=8)
    L = extremal_search(k, n, 2.0, restarts=8, objective="generator")
    assert abs(g.best_ratio - math.sqrt(n)) < 1e-6
    assert abs(L.best_ratio - n) < 1e-6
    assert math.isclose(g.normalized, 1.0, rel_tol=1e-6)


def test_argmax_reproduces_ratio():
    r = extremal_search(1, 4, 4.0, restarts=8)
    assert math.isclose(bernstein_ratio(r.argmax, 4.0), r.best_ratio, rel_tol=1e-9)
    assert r.converged
    assert math.isclose(r.normalized, r.best_ratio / 4 ** grad_exponent(4.0))


def test_generator_argmax_reproduces_ratio():
    r = extremal_search(1, 3, 4.0, restarts=8, objective="generator")
    assert math.isclose(generator_ratio(r.argmax, 4.0), r.best_ratio, rel_tol=1e-9)


def test_search_beats_random_probes():
    # best_ratio dominates every probe, including 10^4 random unit vectors
    for n in (2, 4, 6):
        r = extremal_search(1, n, 4.0, restarts=16)
        assert r.best_ratio >= random_probe_max(1, n, 4.0, probes=10**4) * (1 - 1e-12)
        H = GaussPoly(1, {(n,): 1.0})
        assert bernstein_ratio(H, 4.0) <= r.best_ratio <= 10 * n ** grad_exponent(4.0)


def test_p4_ratios_grow_with_n():
    ratios = [extremal_search(1, n, 4.0, restarts=8).best_ratio for n in range(1, 7)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_search_preconditions():
    with pytest.raises(ValueError):
        extremal_search(1, 3, 1.0)
    with pytest.raises(ValueError):
        extremal_search(4, 3, 2.0)
    with pytest.raises(ValueError):
        extremal_search(1, 9, 2.0)
    with pytest.raises(ValueError):
        extremal_search(1, 3, 2.0, objective="other")


def test_report_serializes():
    d = extremal_search(1, 2, 3.0, restarts=4).to_dict()
    assert d["n"] == 2 and "argmax" in d and d["restarts"] == 4
