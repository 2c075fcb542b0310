"""Single-polynomial verdicts for the Bernstein-Markov family of inequalities.

Every check returns an :class:`InequalityVerdict`. Inequalities with an
explicit constant give a hard pass/fail; those whose constant is only known
to exist record the normalized ratio and are compared against a configurable
ceiling. Verdicts whose distance to the threshold is smaller than the
quadrature error are marked inconclusive instead of being guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import tanhsinh
from scipy.optimize import minimize

from .hermite import GaussPoly
from .integration import (
    LogModulus,
    NormResult,
    expectation,
    grad_lp_norm,
    lp_norm,
    weighted_sup_norm,
)
from .lens import ConvexGauge, LensDomain, generator_exponent, grad_exponent
from .operators import ou_generator, sqrt_minus_L

HARD_RTOL = 1e-7
EMPIRICAL_CEILING = 10.0
CONSTANT_MTH03 = 10.0
CONSTANT_LUSTP = 2.0
# an error estimate counts only if the verdict margin exceeds this multiple of it
CONFIDENCE = 4.0


class DegeneratePolynomialError(ValueError):
    """The ratio is undefined (zero or constant polynomial)."""


@dataclass(frozen=True)
class InequalityVerdict:
    """lhs <= rhs checked as ratio <= 1 + tolerance.

    ``conclusive`` is False when the quadrature error straddles the
    threshold; ``status`` then reads "inconclusive".
    """

    name: str
    lhs: float
    rhs: float
    ratio: float
    ok: bool
    witness: GaussPoly | None = None
    params: dict = field(default_factory=dict)
    conclusive: bool = True
    label: str = ""

    @property
    def status(self) -> str:
        if self.label:
            return self.label
        if not self.conclusive:
            return "inconclusive"
        return "pass" if self.ok else "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "ok": self.ok,
            "status": self.status,
            "params": self.params,
            "witness": self.witness.to_dict() if self.witness is not None else None,
        }


def _val(x) -> tuple[float, float]:
    if isinstance(x, NormResult):
        return x.value, x.error_estimate
    return float(x), 0.0


def make_verdict(
    name: str,
    lhs,
    rhs,
    *,
    tol: float = HARD_RTOL,
    ceiling: float = 1.0,
    witness: GaussPoly | None = None,
    params: dict | None = None,
    label: str = "",
) -> InequalityVerdict:
    """Verdict for lhs <= ceiling * rhs * (1 + tol) with error-aware conclusiveness.

    ``ratio`` is lhs / rhs; inputs may be floats or NormResults.
    """
    lv, le = _val(lhs)
    rv, re = _val(rhs)
    params = dict(params or {})
    params.setdefault("tolerance", tol)
    if rv == 0.0:
        ratio = 0.0 if lv == 0.0 else math.inf
    else:
        ratio = lv / rv
    threshold = ceiling * (1 + tol)
    ok = ratio <= threshold
    rel = (le / lv if lv else 0.0) + (re / rv if rv else 0.0)
    conclusive = abs(ratio - threshold) > CONFIDENCE * rel * max(ratio, 1e-300) or rel == 0.0
    return InequalityVerdict(name, lv, rv, ratio, ok, witness, params, conclusive, label)


def _require_nonzero(P: GaussPoly) -> None:
    if P.is_zero():
        raise DegeneratePolynomialError("the zero polynomial has no ratio")


def _scaled(res: NormResult, factor: float) -> NormResult:
    if res.mode == "exact":
        return NormResult(res.value * factor, "exact", 0.0)
    return NormResult(res.value * factor, res.mode, res.error_estimate * factor)


def _params(P: GaussPoly, **extra) -> dict:
    return {"k": P.dim, "deg": P.degree, **extra}


# ---------------------------------------------------------------------------
# ratios


def bernstein_ratio(P: GaussPoly, p: float) -> float:
    """||grad P||_p / ||P||_p."""
    _require_nonzero(P)
    return grad_lp_norm(P, p).value / lp_norm(P, p).value


def generator_ratio(P: GaussPoly, p: float) -> float:
    """||LP||_p / ||P||_p."""
    _require_nonzero(P)
    return lp_norm(ou_generator(P), p).value / lp_norm(P, p).value


def riesz_ratio_probe(P: GaussPoly, p: float) -> float:
    """||grad P||_p / ||(-L)^(1/2) P||_p; equal to 1 at p = 2."""
    if P.degree < 1:
        raise DegeneratePolynomialError("constant polynomials have no Riesz ratio")
    return grad_lp_norm(P, p).value / lp_norm(sqrt_minus_L(P), p).value


def gaussian_abs_moment(p: float) -> float:
    """(E|g|^p)^(1/p) = sqrt(2) (Gamma((p+1)/2) / sqrt(pi))^(1/p)."""
    return math.sqrt(2.0) * math.exp((math.lgamma((p + 1) / 2) - 0.5 * math.log(math.pi)) / p)


# ---------------------------------------------------------------------------
# L^p inequalities


def verify_mth02(P: GaussPoly, p: float, ceiling: float = EMPIRICAL_CEILING) -> InequalityVerdict:
    """||grad P|| against n^{grad_exponent(p)} ||P||; the constant is empirical."""
    _require_nonzero(P)
    n = max(P.degree, 1)
    lhs = grad_lp_norm(P, p)
    norm = lp_norm(P, p)
    rhs = _scaled(norm, n ** grad_exponent(p))
    # the rotation bound n ||P|| / (E|g|^p)^{1/p}, reported alongside for comparison
    rotation = lhs.value * gaussian_abs_moment(p) / (n * norm.value)
    params = _params(P, p=p, rotation_ratio=rotation)
    return make_verdict("mth02", lhs, rhs, ceiling=ceiling, witness=P, params=params)


def verify_mth03(P: GaussPoly, p: float) -> InequalityVerdict:
    """||LP|| <= 10 n^{generator_exponent(p)} ||P||, a hard bound."""
    _require_nonzero(P)
    n = max(P.degree, 1)
    lhs = lp_norm(ou_generator(P), p)
    rhs = _scaled(lp_norm(P, p), CONSTANT_MTH03 * n ** generator_exponent(p))
    return make_verdict("mth03", lhs, rhs, witness=P, params=_params(P, p=p))


def verify_freud_1d(P: GaussPoly, p: float, ceiling: float = EMPIRICAL_CEILING) -> InequalityVerdict:
    """||P'|| against sqrt(n / p) ||P|| on the line; the constant is empirical."""
    _require_nonzero(P)
    if P.dim != 1:
        raise ValueError("the one-dimensional Freud check needs k = 1")
    n = max(P.degree, 1)
    lhs = grad_lp_norm(P, p)
    rhs = _scaled(lp_norm(P, p), math.sqrt(n / p))
    return make_verdict("freud_1d", lhs, rhs, ceiling=ceiling, witness=P, params=_params(P, p=p))


def verify_mth04(P: GaussPoly, gauge: ConvexGauge) -> InequalityVerdict:
    """E B(|LP|) <= E B(10 n^{alpha_B} |P|)."""
    _require_nonzero(P)
    n = max(P.degree, 1)
    lens = LensDomain.from_gauge(gauge)
    lhs = expectation(ou_generator(P), gauge)
    rhs = expectation(P.scale(CONSTANT_MTH03 * n**lens.alpha), gauge)
    label = "conditional" if gauge.conditional else ""
    if not (math.isfinite(lhs.value) and math.isfinite(rhs.value)):
        # e.g. the exponential gauge against a polynomial of degree >= 3
        label = "divergent"
    return make_verdict(
        "mth04", lhs, rhs, witness=P, params=_params(P, gauge=gauge.name), label=label
    )


def real_up_to_phase(coeffs, rtol: float = 1e-12) -> bool:
    """True when the coefficients are a unimodular multiple of a real vector."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0:
        return True
    top = c[np.argmax(np.abs(c))]
    if top == 0:
        return True
    rotated = c * (abs(top) / top)
    return bool(np.max(np.abs(rotated.imag)) <= rtol * abs(top))


def rot2_ph1_label(P: GaussPoly) -> str:
    """Label "complex" when grad P(x).y is not |grad P(x)| times a real Gaussian.

    The reduced form of ph1 only follows for real polynomials (up to a phase)
    or k = 1; e.g. x1 + i x2 violates it for p > 2.
    """
    if P.dim >= 2 and not real_up_to_phase(list(P.coeffs.values())):
        return "complex"
    return ""


def verify_rot2(P: GaussPoly, p: float) -> tuple[InequalityVerdict, InequalityVerdict]:
    """(E|g|^p)^{1/p} ||grad P|| <= n ||P|| and ||LP|| <= n^2 ||P||."""
    n = max(P.degree, 0)
    norm = lp_norm(P, p)
    ph1 = make_verdict(
        "rot2_ph1",
        _scaled(grad_lp_norm(P, p), gaussian_abs_moment(p)),
        _scaled(norm, n),
        witness=P,
        params=_params(P, p=p),
        label=rot2_ph1_label(P),
    )
    ph2 = make_verdict(
        "rot2_ph2",
        lp_norm(ou_generator(P), p),
        _scaled(norm, n * n),
        witness=P,
        params=_params(P, p=p),
    )
    return ph1, ph2


def verify_lustp(P: GaussPoly, p: float) -> InequalityVerdict:
    """||(-L)^{1/2} P|| <= 2 ||P||^{1/2} ||LP||^{1/2}."""
    lhs = lp_norm(sqrt_minus_L(P), p)
    if P.degree < 1:
        return make_verdict("lustp", lhs, 0.0, witness=P, params=_params(P, p=p), label="degenerate")
    a = lp_norm(P, p)
    b = lp_norm(ou_generator(P), p)
    value = CONSTANT_LUSTP * math.sqrt(a.value * b.value)
    if a.mode == b.mode == "exact":
        rhs = NormResult(value, "exact", 0.0)
    else:
        rel = 0.5 * (a.error_estimate / a.value + b.error_estimate / b.value)
        rhs = NormResult(value, "quadrature", max(rel * value, 1e-300))
    return make_verdict("lustp", lhs, rhs, witness=P, params=_params(P, p=p))


# ---------------------------------------------------------------------------
# sup-norm inequalities


def verify_freud_infty(P: GaussPoly, seed: int = 0) -> InequalityVerdict:
    """sup |grad P| phi_k against sqrt(n) sup |P| phi_k; the ratio is recorded."""
    _require_nonzero(P)
    if P.dim > 3:
        raise ValueError("sup-norm checks are limited to k <= 3")
    n = max(P.degree, 1)
    lhs = weighted_sup_norm(P, "phi", gradient=True, seed=seed)
    rhs = math.sqrt(n) * weighted_sup_norm(P, "phi", seed=seed)
    return make_verdict(
        "freud_infty", lhs, rhs, ceiling=EMPIRICAL_CEILING, witness=P, params=_params(P)
    )


def freud_sup_ratio(P: GaussPoly) -> float:
    """sup |grad P| phi_k / sup |P| phi_k without normalisation."""
    return weighted_sup_norm(P, "phi", gradient=True) / weighted_sup_norm(P, "phi")


def mrs_radius(n: int, kind: str = "half") -> float:
    """Ball radius for the restricted range check: sqrt(n/2) by default, sqrt(n) for "mrs"."""
    if kind == "half":
        return math.sqrt(n / 2)
    if kind == "mrs":
        return math.sqrt(n)
    raise ValueError(f"unknown radius kind {kind!r}")


def _constrained_sup(obj: LogModulus, starts: np.ndarray, radius: float, inside: bool):
    """Best local max of log|P| + log W over |x| <= radius (or >= radius)."""
    sign = 1.0 if inside else -1.0
    cons = {
        "type": "ineq",
        "fun": lambda x: sign * (radius**2 - x @ x),
        "jac": lambda x: sign * (-2.0 * x),
    }
    best = (-np.inf, None)
    for x0 in starts:
        res = minimize(
            lambda x: tuple(-v for v in obj(x)),
            x0,
            jac=True,
            method="SLSQP",
            constraints=[cons],
            options={"ftol": 1e-14, "maxiter": 300},
        )
        x = res.x
        r = np.linalg.norm(x)
        # snap tiny constraint violations back onto the admissible set
        if (inside and r > radius) or (not inside and r < radius):
            x = x * (radius / r) if r > 0 else x
        v = float(obj.values(x)[0])
        if v > best[0]:
            best = (v, x)
    return best


def _range_sups_1d(obj: LogModulus, radius: float) -> tuple[float, float]:
    crit = obj.critical_points_1d()
    pts = np.concatenate([crit, [-radius, radius]]).reshape(-1, 1)
    vals = obj.values(pts)
    inner = np.abs(pts[:, 0]) <= radius
    outer = np.abs(pts[:, 0]) >= radius
    return float(vals[inner].max()), float(vals[outer].max())


def restricted_range_sups(
    P: GaussPoly, radius: float | None = None, seed: int = 0, starts: int = 8
) -> tuple[float, float]:
    """(sup inside the ball, sup outside the ball) of |P| e^{-|x|^2}."""
    n = max(P.degree, 1)
    radius = mrs_radius(n) if radius is None else radius
    obj = LogModulus(P, "W")
    if P.dim == 1:
        return _range_sups_1d(obj, radius)
    rng = np.random.default_rng(seed)
    k = P.dim
    dirs = rng.standard_normal((4096, k))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    shells = rng.random(4096)
    inner_pts = dirs * (radius * shells ** (1.0 / k))[:, None]
    outer_pts = dirs * (radius + (2 * radius + 2) * shells)[:, None]
    sphere = dirs * radius
    # sphere points are admissible on both sides and link the two searches
    inner_cand = np.vstack([inner_pts, sphere, np.zeros((1, k))])
    outer_cand = np.vstack([outer_pts, sphere])
    iv = obj.values(inner_cand)
    ov = obj.values(outer_cand)
    inside = _constrained_sup(obj, inner_cand[np.argsort(-iv)[:starts]], radius, True)[0]
    outside = _constrained_sup(obj, outer_cand[np.argsort(-ov)[:starts]], radius, False)[0]
    inside = max(inside, float(iv.max()))
    outside = max(outside, float(ov.max()))
    return inside, outside


def restricted_range_check(
    P: GaussPoly, radius_kind: str = "half", seed: int = 0
) -> InequalityVerdict:
    """sup over |x| >= a_n of |P| W_k must not exceed the sup over |x| <= a_n."""
    _require_nonzero(P)
    if P.dim > 3:
        raise ValueError("sup-norm checks are limited to k <= 3")
    n = max(P.degree, 1)
    radius = mrs_radius(n, radius_kind)
    inside, outside = restricted_range_sups(P, radius, seed)
    return make_verdict(
        "restricted_range",
        outside,
        inside,
        tol=1e-9,
        witness=P,
        params=_params(P, radius=radius, radius_kind=radius_kind),
    )


# ---------------------------------------------------------------------------
# trigonometric polynomials


@dataclass(frozen=True)
class TrigPoly:
    """a_0 + sum_j a_j cos(jt) + b_j sin(jt), j = 1..n."""

    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cos", np.asarray(self.cos, dtype=float))
        object.__setattr__(self, "sin", np.asarray(self.sin, dtype=float))
        if len(self.sin) != len(self.cos) - 1:
            raise ValueError("need n + 1 cosine and n sine coefficients")

    @property
    def degree(self) -> int:
        return len(self.sin)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.arange(1, self.degree + 1)
        ang = np.multiply.outer(t, j)
        return self.cos[0] + np.cos(ang) @ self.cos[1:] + np.sin(ang) @ self.sin

    def derivative(self) -> "TrigPoly":
        j = np.arange(1, self.degree + 1)
        return TrigPoly(np.concatenate([[0.0], j * self.sin]), -j * self.cos[1:])

    def zeros(self) -> np.ndarray:
        """Real zeros in [0, 2 pi) via the degree-2n algebraic polynomial in e^{it}."""
        n = self.degree
        if n == 0:
            return np.zeros(0)
        # f(t) = sum_{j=-n}^{n} h_j e^{ijt}
        h = np.zeros(2 * n + 1, dtype=complex)
        h[n] = self.cos[0]
        h[n + 1 :] = 0.5 * (self.cos[1:] - 1j * self.sin)
        h[:n] = (0.5 * (self.cos[1:] + 1j * self.sin))[::-1]
        h = np.trim_zeros(h, "b")
        if len(h) < 2 or np.all(h == 0):
            return np.zeros(0)
        r = np.roots(h[::-1])
        on_circle = r[np.abs(np.abs(r) - 1) < 1e-6]
        return np.sort(np.mod(np.angle(on_circle), 2 * math.pi))


def _periodic_power_integral(f: TrigPoly, p: float, factor: float = 1.0) -> float:
    """int_0^{2 pi} |factor f(t)|^p dt, exact trapezoid for even p, root-split tanh-sinh otherwise."""
    n = f.degree
    if float(p / 2).is_integer():
        N = max(8 * n + 16, int(p * n) + 2)
        t = 2 * math.pi * np.arange(N) / N
        return float(2 * math.pi * np.mean(np.abs(factor * f(t)) ** p))
    cuts = np.unique(np.concatenate([[0.0, 2 * math.pi], f.zeros()]))

    def g(t):
        return np.abs(factor * f(t)) ** p

    res = tanhsinh(g, cuts[:-1], cuts[1:], rtol=1e-13, atol=1e-300)
    return float(np.sum(res.integral))


def zygmund_trig_check(f: TrigPoly, p: float) -> InequalityVerdict:
    """int |f'|^p <= int |n f|^p over a period."""
    n = f.degree
    lhs = _periodic_power_integral(f.derivative(), p)
    rhs = _periodic_power_integral(f, p, factor=float(n))
    return make_verdict("zygmund", lhs, rhs, tol=1e-9, params={"deg": n, "p": p})


# ---------------------------------------------------------------------------
# aggregation helpers


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


def hermite_freud_ratios(ns: Sequence[int]) -> np.ndarray:
    """Unnormalised sup ratios of the single frequencies H_n on the line."""
    return np.array([freud_sup_ratio(GaussPoly(1, {(n,): 1.0})) for n in ns])
