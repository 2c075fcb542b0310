"""The interpolating flow between T_z P and P and its infinitesimal condition.

For a gauge B the profile is R(x) = B(sqrt x), so R(|g|^2) = B(|g|). The flow
value is

    r(s) = E R(|g(x, u, s)|^2),  u ~ N(0, s I_k),  x ~ N(0, (1 - s) I_k),

with g(x, u, s) the Gaussian smoothing of the monomial shadow of P. Its ends
are r(0) = E R(|T_z P|^2) and r(1) = E R(|P|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hermite import GaussPoly, MonoPoly, monomial_shadow, power_table
from .integration import (
    MAX_NODES,
    TENSOR_BUDGET,
    NormResult,
    QuadratureBudgetError,
    _gh,
    _inexact,
    _Integrand,
    _integrate_lines,
    _line_q,
    _weigh,
    exact_node_count,
    expectation,
)
from .lens import ConvexGauge, LensDomain, in_lens, lens_margin
from .operators import FlowPoint, gaussian_smooth, mehler

MONOTONE_RTOL = 1e-8
INF1_RTOL = 1e-12
HYP3_RTOL = 1e-7
EPSILON_LADDER = (1e-1, 1e-2, 1e-3)
X_RANGE = (1e-6, 1e6)


class LensContractError(ValueError):
    """hyp3_check was called with z outside the lens of its gauge."""


def _even_power_degree(gauge: ConvexGauge) -> int | None:
    """Half the largest exponent if B is a sum of even powers, else None."""
    terms = gauge.monomials
    if terms and all(float(e / 2).is_integer() for _, e in terms):
        return int(max(e for _, e in terms) // 2)
    return None


def _profile_integrand(gauge: ConvexGauge) -> _Integrand:
    half = _even_power_degree(gauge)
    if half is not None:
        pairs = [(a, int(e // 2)) for a, e in gauge.monomials]
        return _Integrand(lambda q: sum(a * q**e for a, e in pairs), half)
    return _Integrand(lambda q: gauge.value(np.sqrt(np.maximum(q, 0.0))), None)


def _as_shadow(g) -> MonoPoly:
    if isinstance(g, GaussPoly):
        return monomial_shadow(g)
    if isinstance(g, MonoPoly):
        return g
    raise TypeError("flow polynomials are MonoPoly (or GaussPoly, read through its shadow)")


def _flow_integral(G: MonoPoly, k: int, s: float, m: int, integrand: _Integrand) -> float:
    nodes, w = _gh(m)
    shape = tuple(d + 1 for d in G.axis_degrees())
    C = G.coefficient_tensor(shape)[None]
    scale = [math.sqrt(1.0 - s)] * k + [math.sqrt(s)] * k
    V = C
    for j in range(2 * k):
        V = np.tensordot(V, power_table(scale[j] * nodes, shape[j] - 1), axes=([1], [0]))
    q = V.real**2 + V.imag**2
    return float(_weigh(integrand.phi(q), w, 2 * k)[0])


def flow_value(
    g, gauge: ConvexGauge, z: complex, s: float, *, budget: int = TENSOR_BUDGET
) -> NormResult:
    """r(s) for the polynomial g (k <= 2).

    Exact when B is a sum of even powers; otherwise Gauss-Hermite with one
    node doubling, reporting the change as the error estimate.
    """
    g = _as_shadow(g)
    k = g.dim
    if k > 2:
        raise ValueError("the flow is evaluated for k <= 2 only")
    point = FlowPoint(s, z)
    G = gaussian_smooth(g, point)
    integrand = _profile_integrand(gauge)
    deg = max(g.degree, 0)
    if integrand.q_degree is not None:
        m = exact_node_count(2 * integrand.q_degree, deg)
        if m ** (2 * k) > budget:
            raise QuadratureBudgetError(f"flow rule needs {m}^{2 * k} nodes")
        return NormResult(_flow_integral(G, k, s, m, integrand), "exact", 0.0)
    m = 2 * deg + 8
    if min(2 * m, MAX_NODES) ** (2 * k) > budget:
        raise QuadratureBudgetError("flow rule exceeds the tensor budget")
    lo = _flow_integral(G, k, s, m, integrand)
    hi = _flow_integral(G, k, s, min(2 * m, MAX_NODES), integrand)
    return _inexact(hi, "quadrature", abs(hi - lo))


@dataclass(frozen=True)
class FlowTrace:
    s_grid: np.ndarray
    r_values: np.ndarray
    min_increment: float
    z: complex
    gauge: str

    def __post_init__(self):
        if np.any(np.diff(self.s_grid) <= 0):
            raise ValueError("s grid must be strictly increasing")
        if not np.all(np.isfinite(self.r_values)):
            raise ValueError("flow values must be finite")

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.r_values)))

    @property
    def monotone(self) -> bool:
        return self.min_increment >= -MONOTONE_RTOL * self.scale

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.s_grid.tolist(), self.r_values.tolist()))


def monotonicity_scan(g, gauge: ConvexGauge, z: complex, grid_size: int = 16) -> FlowTrace:
    """r on a uniform grid of [0, 1] with the smallest consecutive increment."""
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    s = np.linspace(0.0, 1.0, grid_size)
    r = np.array([flow_value(g, gauge, z, float(t)).value for t in s])
    return FlowTrace(s, r, float(np.min(np.diff(r))), complex(z), gauge.name)


# ---------------------------------------------------------------------------
# the infinitesimal condition


def _form_matrix(gauge: ConvexGauge, z: complex, x: np.ndarray) -> np.ndarray:
    """Quadratic form in w = (cos t, sin t) as a stack of symmetric 2x2 matrices."""
    a, b = complex(z).real, complex(z).imag
    R1 = gauge.profile_d1(x)
    R2 = gauge.profile_d2(x)
    # Re(z w) = a cos t - b sin t
    v = np.array([a, -b])
    E = np.array([[1.0, 0.0], [0.0, 0.0]]) - np.outer(v, v)
    return (1.0 - abs(z) ** 2) * R1[:, None, None] * np.eye(2) + (2 * x * R2)[:, None, None] * E


def inf1_form(gauge: ConvexGauge, z: complex, x, w) -> np.ndarray:
    """(1 - |z|^2) R'(x)|w|^2 + 2 x R''(x)((Re w)^2 - (Re zw)^2)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=complex)
    return (1 - abs(z) ** 2) * gauge.profile_d1(x) * np.abs(w) ** 2 + 2 * x * gauge.profile_d2(
        x
    ) * (w.real**2 - (z * w).real ** 2)


@dataclass(frozen=True)
class Inf1Result:
    ok: bool
    witness: tuple[float, complex] | None
    min_value: float


def inf1_check(gauge: ConvexGauge, z: complex, samples: int = 1000) -> Inf1Result:
    """Search x on a log grid and w on 64 unit directions for a negative value.

    The form is a quadratic in (cos t, sin t), so its minimum over the circle
    is the smaller eigenvalue of a 2x2 matrix; the 64 sampled directions are
    kept as a cross-check of that closed form. Values are compared with
    R'(x) + 2x|R''(x)| to make the threshold scale free.
    """
    lo, hi = X_RANGE
    if gauge.conditional:
        lo, hi = (t * t for t in gauge.probe_interval)
    x = np.geomspace(lo, hi, samples)
    M = _form_matrix(gauge, complex(z), x)
    evals, evecs = np.linalg.eigh(M)
    scale = gauge.profile_d1(x) + 2 * x * np.abs(gauge.profile_d2(x))
    rel = evals[:, 0] / scale
    t = 2 * math.pi * np.arange(64) / 64
    W = np.exp(1j * t)
    sampled = inf1_form(gauge, complex(z), x[:, None], W[None, :]).min(axis=1) / scale
    rel = np.minimum(rel, sampled)
    bad = np.flatnonzero(rel < -INF1_RTOL)
    if len(bad) == 0:
        return Inf1Result(True, None, float(rel.min()))
    # prefer the violating x nearest 1 for a well-scaled witness
    i = int(bad[np.argmin(np.abs(np.log(x[bad])))])
    vec = evecs[i, :, 0]
    return Inf1Result(False, (float(x[i]), complex(vec[0], vec[1])), float(rel.min()))


# ---------------------------------------------------------------------------
# necessity of the condition


@dataclass(frozen=True)
class NecessityWitness:
    a: complex
    b: complex
    epsilon: float
    lhs: float
    rhs: float
    predicted: float
    remainder: float
    applicable: bool = True

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def ok(self) -> bool:
        """A reproduced violation: lhs > rhs beyond ten times the expansion remainder."""
        return self.applicable and self.margin > 0 and self.margin >= 10 * self.remainder


def _line_integral(gauge: ConvexGauge, a: complex, c: complex) -> float:
    q = _line_q([np.array([[a, c]])])
    vals, _ = _integrate_lines(q, _profile_integrand(gauge))
    return float(vals[0])


def necessity_witness(
    gauge: ConvexGauge, z: complex, witness: tuple[float, complex] | None = None
) -> NecessityWitness:
    """Linear Q(t) = a + b eps t with |a|^2 = x and conj(a) b = w violating the contraction.

    The second order prediction is lhs - rhs = -form(x, w) eps^2 / x; the
    first eps on the ladder whose observed gap beats ten times its distance
    from the prediction is returned.
    """
    if gauge.d3 is None:
        return NecessityWitness(0j, 0j, 0.0, 0.0, 0.0, 0.0, 0.0, applicable=False)
    if witness is None:
        res = inf1_check(gauge, z)
        if res.ok:
            raise ValueError("z satisfies the infinitesimal condition; no witness exists")
        witness = res.witness
    x, w = witness
    if x <= 0:
        raise ValueError("witness needs x > 0")
    a = complex(math.sqrt(x))
    b = complex(w) / a.conjugate()
    form = float(inf1_form(gauge, complex(z), x, w))
    best = None
    for eps in EPSILON_LADDER:
        lhs = _line_integral(gauge, a, b * eps * z)
        rhs = _line_integral(gauge, a, b * eps)
        predicted = -form * eps * eps / x
        cand = NecessityWitness(a, b, eps, lhs, rhs, predicted, abs(lhs - rhs - predicted))
        if cand.ok:
            return cand
        best = best or cand
    return best


# ---------------------------------------------------------------------------
# hypercontractivity on the lens


@dataclass(frozen=True)
class Hyp3Result:
    lhs: float
    rhs: float
    ok: bool
    mode: str
    conclusive: bool = True


def hyp3_check(P: GaussPoly, gauge: ConvexGauge, z: complex, lens: LensDomain | None = None) -> Hyp3Result:
    """E B(|T_z P|) <= E B(|P|) for z in the lens of B."""
    lens = lens or LensDomain.from_gauge(gauge)
    if not in_lens(z, lens):
        raise LensContractError(f"z = {z} lies outside the lens (margin {float(lens_margin(z, lens)):.3e})")
    lhs = expectation(mehler(P, z), gauge)
    rhs = expectation(P, gauge)
    bound = rhs.value * (1 + HYP3_RTOL)
    err = lhs.error_estimate + rhs.error_estimate
    ok = lhs.value <= bound
    mode = "exact" if lhs.mode == rhs.mode == "exact" else "quadrature"
    conclusive = abs(bound - lhs.value) > err
    return Hyp3Result(lhs.value, rhs.value, ok, mode, conclusive)
