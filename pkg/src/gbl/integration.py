"""L^p(gamma_k) norms, Gaussian expectations and weighted sup norms.

Three accuracy modes are reported through :class:`NormResult`:

* ``exact``: the integrand is a polynomial and the tensor Gauss-Hermite rule
  has enough nodes to integrate it without error (up to rounding);
* ``quadrature``: a root-split line rule (tanh-sinh along the last axis
  between the real parts of the near-real zeros, Gauss-Hermite on the
  remaining axes with node doubling);
* ``monte_carlo``: plain sampling with a CLT error bar, opt-in only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import tanhsinh
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize

from .hermite import GaussPoly, hermite_table, multi_indices, power_table

MAX_NODES = 256
TENSOR_BUDGET = 2 * 10**7
STOP_RTOL = 1e-7
MC_SAMPLES = 10**6
LINE_HALF_WIDTH = 40.0
# nominal integrand evaluations charged per line of the line rule
LINE_COST = 4096
NEAR_REAL = 1.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)

MODES = ("exact", "quadrature", "monte_carlo")


class QuadratureBudgetError(RuntimeError):
    """The requested rule exceeds the tensor budget and sampling is disabled."""


# ---------------------------------------------------------------------------
# Gauss-Hermite rules


@lru_cache(maxsize=None)
def _gh(m: int) -> tuple[np.ndarray, np.ndarray]:
    if not 1 <= m <= MAX_NODES:
        raise ValueError(f"node count must lie in [1, {MAX_NODES}], got {m}")
    if m == 1:
        nodes, weights = np.zeros(1), np.ones(1)
    else:
        # Jacobi matrix of the monic probabilists' Hermite recurrence
        off = np.sqrt(np.arange(1, m, dtype=float))
        nodes, vecs = eigh_tridiagonal(np.zeros(m), off)
        weights = vecs[0] ** 2
        # enforce exact symmetry about the origin
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
        weights /= weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Hermite rule for gamma_k with ``m`` nodes per axis."""

    nodes: np.ndarray
    weights: np.ndarray
    axis_count: int = 1

    @property
    def nodes_per_axis(self) -> int:
        return len(self.nodes)

    def tensor(self) -> tuple[np.ndarray, np.ndarray]:
        """All m^k points as an (m^k, k) array and their product weights."""
        k = self.axis_count
        grids = np.meshgrid(*([self.nodes] * k), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = self.weights
        for _ in range(k - 1):
            w = np.multiply.outer(w, self.weights)
        return pts, np.ravel(w)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        pts, w = self.tensor()
        return float(np.dot(w, f(pts)))


def gauss_hermite_rule(m: int, k: int = 1) -> QuadratureRule:
    """Golub-Welsch rule for the standard Gaussian, tensorised over k axes."""
    if k < 1:
        raise ValueError("axis count must be positive")
    nodes, weights = _gh(m)
    return QuadratureRule(nodes, weights, k)


def exact_node_count(power: float, degree: int) -> int:
    """Nodes per axis that integrate a polynomial of degree power*degree exactly."""
    return max(1, math.ceil((power * degree + 1) / 2))


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class NormResult:
    value: float
    mode: str
    error_estimate: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.error_estimate == 0.0) != (self.mode == "exact"):
            raise ValueError("error_estimate must vanish exactly in exact mode")

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"value": self.value, "mode": self.mode, "error_estimate": self.error_estimate}


def _inexact(value: float, mode: str, err: float) -> NormResult:
    floor = max(abs(value) * np.finfo(float).eps, np.finfo(float).tiny)
    return NormResult(float(value), mode, float(max(err, floor)))


# ---------------------------------------------------------------------------
# integrands of the form phi(sum_j |f_j|^2)


@dataclass(frozen=True)
class _Integrand:
    """phi(q) with q = |P|^2 or |grad P|^2.

    ``q_degree`` is set when phi is a polynomial in q of that degree, which
    makes the whole integrand a polynomial.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    q_degree: int | None = None

    @classmethod
    def power(cls, p: float) -> "_Integrand":
        half = p / 2.0
        if float(half).is_integer():
            e = int(half)
            return cls(lambda q: q**e, e)
        return cls(lambda q: np.power(np.maximum(q, 0.0), half), None)


def _components(P: GaussPoly, gradient: bool) -> list[GaussPoly]:
    return P.gradient() if gradient else [P]


def _derivative_table(x, degree: int) -> np.ndarray:
    h = hermite_table(x, max(degree - 1, 0))
    out = np.zeros((degree + 1,) + np.shape(x))
    out[1:] = np.arange(1, degree + 1).reshape((-1,) + (1,) * np.ndim(x)) * h[:degree]
    return out


def _contract(C: np.ndarray, tables: Sequence[np.ndarray]) -> np.ndarray:
    """Values on a tensor grid: C is (B, d_1, .., d_k), tables[j] is (d_j, m)."""
    V = C
    for T in tables:
        V = np.tensordot(V, T, axes=([1], [0]))
    return V


def _weigh(F: np.ndarray, w: np.ndarray, k: int) -> np.ndarray:
    for _ in range(k):
        F = F @ w
    return F


def _grid_q(C: np.ndarray, k: int, nodes: np.ndarray, gradient: bool) -> np.ndarray:
    """|P|^2 (or |grad P|^2) on the tensor grid for a batch of coefficient tensors."""
    degs = C.shape[1:]
    H = [hermite_table(nodes, d - 1) for d in degs]
    if not gradient:
        V = _contract(C, H)
        return V.real**2 + V.imag**2
    q = 0.0
    for j in range(k):
        tabs = list(H)
        tabs[j] = _derivative_table(nodes, degs[j] - 1)
        V = _contract(C, tabs)
        q = q + V.real**2 + V.imag**2
    return q


def _tensor_integral(
    C: np.ndarray, k: int, m: int, integrand: _Integrand, gradient: bool
) -> np.ndarray:
    """Batch tensor Gauss-Hermite integral of phi(q), chunked over the batch."""
    nodes, w = _gh(m)
    step = max(1, 2**22 // max(1, m**k))
    out = np.empty(C.shape[0])
    for lo in range(0, C.shape[0], step):
        q = _grid_q(C[lo : lo + step], k, nodes, gradient)
        out[lo : lo + step] = _weigh(integrand.phi(q), w, k)
    return out


# ---------------------------------------------------------------------------
# root-split line rule


def _line_q(mono: list[np.ndarray]) -> np.ndarray:
    """Coefficients (lowest first) of sum_j |f_j(t)|^2 for rows of line polynomials."""
    L, d1 = mono[0].shape
    q = np.zeros((L, 2 * d1 - 1))
    for c in mono:
        cc = np.conj(c)
        for i in range(d1):
            q[:, i : i + d1] += (c[:, i : i + 1] * cc).real
    return q


def _integrate_lines(
    q: np.ndarray, integrand: _Integrand, half_width: float = LINE_HALF_WIDTH
) -> tuple[np.ndarray, np.ndarray]:
    """Integral of phi(q(t)) dgamma_1(t) for each row of q, split at near-real zeros."""
    L, D1 = q.shape
    starts, stops, owner = [], [], []
    for i in range(L):
        row = np.trim_zeros(q[i], "b")
        cuts = [-half_width, half_width]
        if len(row) > 1:
            r = np.roots(row[::-1])
            r = r[np.abs(r.imag) < NEAR_REAL].real
            cuts.extend(r[np.abs(r) < half_width].tolist())
        cuts = np.unique(cuts)
        starts.extend(cuts[:-1])
        stops.extend(cuts[1:])
        owner.extend([i] * (len(cuts) - 1))
    a = np.asarray(starts)
    b = np.asarray(stops)
    owner = np.asarray(owner)
    keep = b - a > 1e-14
    a, b, owner = a[keep], b[keep], owner[keep]
    hi_first = q[owner][:, ::-1]
    cols = tuple(hi_first[:, j] for j in range(D1))

    def f(t, *cs):
        v = np.zeros_like(t)
        for c in cs:
            v = v * t + c
        return integrand.phi(np.maximum(v, 0.0)) * np.exp(-0.5 * t * t) / _SQRT_2PI

    res = tanhsinh(f, a, b, args=cols, rtol=1e-12, atol=1e-300)
    vals = np.bincount(owner, weights=res.integral, minlength=L)
    errs = np.bincount(owner, weights=np.abs(res.error), minlength=L)
    return vals, errs


def _line_rule(
    components: list[GaussPoly],
    integrand: _Integrand,
    budget: int,
) -> tuple[float, float, bool]:
    """(value, error estimate, converged) from the root-split line rule."""
    k = components[0].dim
    mono_polys = [c.to_monomial() for c in components]
    shape = tuple(
        max(max(mp.axis_degrees()[j] for mp in mono_polys), 0) + 1 for j in range(k)
    )
    tensors = [mp.coefficient_tensor(shape) for mp in mono_polys]
    if k == 1:
        q = _line_q([t.reshape(1, -1) for t in tensors])
        vals, errs = _integrate_lines(q, integrand)
        return float(vals[0]), float(errs[0]), True
    deg = max(c.degree for c in components)
    m = max(8, deg + 4)
    prev = None
    while True:
        if m > MAX_NODES or m ** (k - 1) * LINE_COST > budget:
            return prev[0], prev[1], False
        nodes, w = _gh(m)
        P = power_table(nodes, max(shape) - 1)
        lines = []
        for t in tensors:
            V = t[None]
            for j in range(k - 1):
                V = np.tensordot(V, P[: shape[j]], axes=([1], [0]))
            # V has shape (1, d_last, m, .., m); move the line axis last
            V = np.moveaxis(V[0], 0, -1).reshape(-1, shape[-1])
            lines.append(V)
        vals, errs = _integrate_lines(_line_q(lines), integrand)
        wk = w
        for _ in range(k - 2):
            wk = np.multiply.outer(wk, w)
        wk = wk.ravel()
        value = float(wk @ vals)
        line_err = float(wk @ errs)
        if prev is not None:
            delta = abs(value - prev[0])
            if delta <= STOP_RTOL * abs(value) or value == 0.0:
                return value, max(delta, line_err), True
            prev = (value, max(delta, line_err))
        else:
            prev = (value, max(line_err, abs(value)))
        m *= 2


def _affine_integral(P: GaussPoly, integrand: _Integrand) -> tuple[float, float]:
    """int phi(|P|^2) dgamma_k for P of degree one, in any dimension.

    By rotation invariance P = c0 + l1 Z1 + l2 Z2 with Z1, Z2 standard
    normal. Along Z2 the integrand is smooth except where a line passes
    through the zero of P; that happens at a single outer value s*, which
    becomes a breakpoint of the outer tanh-sinh rule.
    """
    k = P.dim
    c0 = complex(P.coeffs.get((0,) * k, 0.0))
    c = np.array([complex(P.coeffs.get(tuple(int(i == j) for i in range(k)), 0.0)) for j in range(k)])
    basis, sing, _ = np.linalg.svd(np.stack([c.real, c.imag], axis=1), full_matrices=False)
    lam = c @ basis
    T = LINE_HALF_WIDTH
    if len(sing) < 2 or sing[1] <= 1e-13 * max(sing[0], 1e-300):
        lam1 = lam[int(np.argmax(np.abs(lam)))]
        q = _line_q([np.array([[c0, lam1]])])
        vals, errs = _integrate_lines(q, integrand)
        return float(vals[0]), float(errs[0])
    l1, l2 = lam
    r1, r0 = l1 / l2, c0 / l2
    cuts = [-T, T]
    s_star = -r0.imag / r1.imag
    if abs(s_star) < T:
        cuts.insert(1, s_star)
    inner_err = [0.0]

    def outer(s):
        flat = np.ravel(s)
        A = c0 + l1 * flat
        rows = [np.stack([A, np.full_like(A, l2)], axis=1)]
        vals, errs = _integrate_lines(_line_q(rows), integrand)
        inner_err[0] = max(inner_err[0], float(errs.max(initial=0.0)))
        return (vals * np.exp(-0.5 * flat * flat) / _SQRT_2PI).reshape(np.shape(s))

    res = tanhsinh(outer, np.array(cuts[:-1]), np.array(cuts[1:]), rtol=1e-11, atol=1e-300)
    return float(res.integral.sum()), float(np.abs(res.error).sum() + inner_err[0])


def _monte_carlo(
    components: list[GaussPoly], integrand: _Integrand, samples: int, seed: int
) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    k = components[0].dim
    total = 0.0
    total2 = 0.0
    step = 10**5
    done = 0
    while done < samples:
        n = min(step, samples - done)
        x = rng.standard_normal((n, k))
        q = sum(np.abs(c.evaluate(x)) ** 2 for c in components)
        v = integrand.phi(q)
        total += float(v.sum())
        total2 += float((v * v).sum())
        done += n
    mean = total / samples
    var = max(total2 / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def _integrate(
    components: list[GaussPoly],
    integrand: _Integrand,
    *,
    budget: int = TENSOR_BUDGET,
    mc_fallback: bool = False,
    seed: int = 0,
) -> NormResult:
    """Integral of phi(sum_j |f_j|^2) against gamma_k."""
    k = components[0].dim
    deg = max(c.degree for c in components)
    if deg <= 0:
        q0 = sum(abs(c.coeffs.get((0,) * k, 0.0)) ** 2 for c in components)
        return NormResult(float(integrand.phi(np.float64(q0))), "exact", 0.0)
    active = [j for j in range(k) if any(a[j] for c in components for a in c.coeffs)]
    if len(active) < k:
        # gamma_k is a product measure: unused coordinates integrate out
        reduced = [_restrict(c, active) for c in components]
        return _integrate(reduced, integrand, budget=budget, mc_fallback=mc_fallback, seed=seed)
    if integrand.q_degree is not None:
        m = exact_node_count(2 * integrand.q_degree, deg)
        if m > MAX_NODES or m**k > budget:
            if not mc_fallback:
                raise QuadratureBudgetError(f"exact rule needs {m}^{k} nodes")
        else:
            shape = tuple(
                max(c.axis_degrees()[j] for c in components) + 1 for j in range(k)
            )
            value = 0.0
            if len(components) > 1:
                # gradient components: integrate phi(sum of squares) jointly
                nodes, w = _gh(m)
                q = 0.0
                H = [hermite_table(nodes, d - 1) for d in shape]
                for c in components:
                    V = _contract(c.coefficient_tensor(shape)[None], H)
                    q = q + V.real**2 + V.imag**2
                value = float(_weigh(integrand.phi(q), w, k)[0])
            else:
                C = components[0].coefficient_tensor(shape)[None]
                value = float(_tensor_integral(C, k, m, integrand, False)[0])
            return NormResult(max(value, 0.0), "exact", 0.0)
    if deg == 1 and len(components) == 1:
        value, err = _affine_integral(components[0], integrand)
        return _inexact(value, "quadrature", err)
    if 8 ** (k - 1) * LINE_COST > budget and not mc_fallback:
        raise QuadratureBudgetError("initial line rule exceeds the tensor budget")
    value, err, converged = _line_rule(components, integrand, budget)
    if converged or not mc_fallback:
        return _inexact(value, "quadrature", err)
    mean, se = _monte_carlo(components, integrand, MC_SAMPLES, seed)
    return _inexact(mean, "monte_carlo", se)


def _restrict(P: GaussPoly, axes: list[int]) -> GaussPoly:
    return GaussPoly(len(axes), {tuple(a[j] for j in axes): c for a, c in P.coeffs.items()})


def _single_term_moment(P: GaussPoly, p: float, **kw) -> NormResult:
    """int |c H_alpha|^p = |c|^p prod_j int |H_{alpha_j}|^p, one line integral per axis."""
    ((alpha, c),) = P.coeffs.items()
    value, rel, exact = abs(c) ** p, 0.0, True
    for a in alpha:
        if a == 0:
            continue
        r = _integrate([GaussPoly(1, {(a,): 1.0})], _Integrand.power(p), **kw)
        value *= r.value
        rel += r.error_estimate / r.value if r.value else 0.0
        exact = exact and r.mode == "exact"
    if exact:
        return NormResult(value, "exact", 0.0)
    return _inexact(value, "quadrature", rel * value)


def _root(result: NormResult, p: float) -> NormResult:
    v = result.value
    value = v ** (1.0 / p)
    if result.mode == "exact":
        return NormResult(value, "exact", 0.0)
    if v > 0:
        err = result.error_estimate * value / (p * v)
    else:
        err = result.error_estimate ** (1.0 / p)
    return _inexact(value, result.mode, err)


def _check_p(p: float, experimental: bool) -> None:
    if p <= 0 or (p < 1 and not experimental):
        raise ValueError(f"exponent must be >= 1, got {p}")


def lp_norm(
    P: GaussPoly,
    p: float,
    *,
    budget: int = TENSOR_BUDGET,
    mc_fallback: bool = False,
    experimental: bool = False,
    seed: int = 0,
) -> NormResult:
    """(int |P|^p dgamma_k)^(1/p).

    Exponents below 1 are refused unless ``experimental`` is set.
    """
    _check_p(p, experimental)
    if P.is_zero():
        return NormResult(0.0, "exact", 0.0)
    kw = dict(budget=budget, mc_fallback=mc_fallback, seed=seed)
    if len(P.coeffs) == 1:
        return _root(_single_term_moment(P, p, **kw), p)
    return _root(_integrate([P], _Integrand.power(p), **kw), p)


def grad_lp_norm(
    P: GaussPoly,
    p: float,
    *,
    budget: int = TENSOR_BUDGET,
    mc_fallback: bool = False,
    experimental: bool = False,
    seed: int = 0,
) -> NormResult:
    """(int |grad P|^p dgamma_k)^(1/p) with |.| the Euclidean length."""
    _check_p(p, experimental)
    comps = [g for g in P.gradient() if not g.is_zero()]
    if not comps:
        return NormResult(0.0, "exact", 0.0)
    res = _integrate(
        comps, _Integrand.power(p), budget=budget, mc_fallback=mc_fallback, seed=seed
    )
    return _root(res, p)


def _gauge_integrand(gauge) -> _Integrand:
    if isinstance(gauge, (int, float)):
        return _Integrand.power(float(gauge))
    terms = getattr(gauge, "monomials", None)
    if terms and all(float(e / 2).is_integer() for _, e in terms):
        pairs = [(a, int(e // 2)) for a, e in terms]
        top = max(e for _, e in pairs)
        return _Integrand(lambda q: sum(a * q**e for a, e in pairs), top)
    value = gauge.value if hasattr(gauge, "value") else gauge
    return _Integrand(lambda q: value(np.sqrt(np.maximum(q, 0.0))), None)


def expectation(
    P: GaussPoly,
    gauge,
    *,
    budget: int = TENSOR_BUDGET,
    mc_fallback: bool = False,
    seed: int = 0,
) -> NormResult:
    """int gauge(|P|) dgamma_k.

    ``gauge`` is a number p (meaning t^p), a callable, or an object with a
    ``value`` callable and optional ``monomials`` list of (coefficient,
    exponent) pairs used to detect polynomial integrands.
    """
    integrand = _gauge_integrand(gauge)
    if P.is_zero():
        return NormResult(float(integrand.phi(np.float64(0.0))), "exact", 0.0)
    return _integrate([P], integrand, budget=budget, mc_fallback=mc_fallback, seed=seed)


def monte_carlo_lp(P: GaussPoly, p: float, samples: int = MC_SAMPLES, seed: int = 0):
    """Sampling estimate of int |P|^p dgamma with its standard error."""
    return _monte_carlo([P], _Integrand.power(p), samples, seed)


# ---------------------------------------------------------------------------
# batched fixed rules for sweeps


def coefficient_tensors(coeffs: np.ndarray, k: int, n: int) -> np.ndarray:
    """Scatter rows of Hermite coefficients (ordered as multi_indices(k, n)) to tensors."""
    alphas = np.array(multi_indices(k, n))
    C = np.zeros((coeffs.shape[0],) + (n + 1,) * k, dtype=complex)
    C[(slice(None),) + tuple(alphas.T)] = coeffs
    return C


def batch_moments(
    C: np.ndarray, p: float, *, gradient: bool = False, m: int | None = None
) -> tuple[np.ndarray, np.ndarray, bool]:
    """int |P|^p (or |grad P|^p) for a batch of coefficient tensors.

    Returns (values, error estimates, exact). Even p uses the exact rule;
    otherwise the rules with m and 2m nodes are compared.
    """
    k = C.ndim - 1
    deg = max(C.shape[1:]) - 1
    integrand = _Integrand.power(p)
    if integrand.q_degree is not None:
        m = exact_node_count(p, max(deg, 0))
        return _tensor_integral(C, k, m, integrand, gradient), np.zeros(len(C)), True
    if m is None:
        m = 4 * deg + 12
    lo = _tensor_integral(C, k, m, integrand, gradient)
    hi = _tensor_integral(C, k, min(2 * m, MAX_NODES), integrand, gradient)
    return hi, np.abs(hi - lo), False


# ---------------------------------------------------------------------------
# weighted sup norms

WEIGHTS = ("phi", "W")


def _log_weight(x: np.ndarray, weight: str) -> tuple[np.ndarray, np.ndarray]:
    """log w and its gradient for rows of x."""
    k = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    if weight == "phi":
        return -0.5 * r2 - 0.5 * k * math.log(2 * math.pi), -x
    if weight == "W":
        return -r2, -2.0 * x
    raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")


class LogModulus:
    """log(|f|) + log(weight) with f = P or f = |grad P|, and its gradient."""

    def __init__(self, P: GaussPoly, weight: str = "phi", gradient: bool = False):
        if weight not in WEIGHTS:
            raise ValueError(f"unknown weight {weight!r}; expected one of {WEIGHTS}")
        self.dim = P.dim
        self.weight = weight
        self.components = [c for c in _components(P, gradient) if not c.is_zero()]
        keys = sorted({a for c in self.components for a in c.coeffs})
        self._alphas = np.array(keys, dtype=int).reshape(-1, self.dim)
        self._cmat = np.array([c.dense(keys) for c in self.components]).reshape(
            len(self.components), len(keys)
        )
        self._deg = int(self._alphas.max(initial=0))

    def modulus2(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return sum(np.abs(c.evaluate(x)) ** 2 for c in self.components)

    def values(self, x: np.ndarray) -> np.ndarray:
        """|f(x)| w(x) for rows of x."""
        x = np.atleast_2d(x)
        if not self.components:
            return np.zeros(len(x))
        lw, _ = _log_weight(x, self.weight)
        return np.sqrt(self.modulus2(x)) * np.exp(lw)

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        k = self.dim
        idx = np.arange(k)
        H = hermite_table(x, self._deg)
        D = _derivative_table(x, self._deg)
        Hv = H[self._alphas, idx]
        Dv = D[self._alphas, idx]
        G = np.empty_like(Hv)
        for j in range(k):
            G[:, j] = Dv[:, j] * np.prod(np.delete(Hv, j, axis=1), axis=1)
        vals = self._cmat @ np.prod(Hv, axis=1)
        grads = self._cmat @ G
        S = float(np.sum(vals.real**2 + vals.imag**2))
        dS = 2.0 * (np.conj(vals) @ grads).real
        lw, dlw = _log_weight(x, self.weight)
        if S <= 0.0:
            return -np.inf, np.zeros(k)
        return 0.5 * math.log(S) + float(lw), dS / (2.0 * S) + dlw

    def critical_points_1d(self) -> np.ndarray:
        """All real critical points of |f| w on the line (k = 1)."""
        mono = [c.to_monomial() for c in self.components]
        d = max(mp.degree for mp in mono)
        cs = [np.array([mp.coeffs.get((i,), 0j) for i in range(d + 1)]) for mp in mono]
        S = _line_q([c.reshape(1, -1) for c in cs])[0]
        # (1/2) log S + log w stationary  <=>  S' + 2 S (log w)' = 0
        slope = 1.0 if self.weight == "phi" else 2.0
        dS = np.polynomial.polynomial.polyder(S)
        h = np.polynomial.polynomial.polysub(
            dS, 2.0 * slope * np.polynomial.polynomial.polymulx(S)
        )
        h = np.trim_zeros(h, "b")
        if len(h) <= 1:
            return np.zeros(1)
        r = np.roots(h[::-1])
        r = r[np.abs(r.imag) < 1e-3].real
        # polish with Newton on h
        dh = np.polynomial.polynomial.polyder(h)
        for _ in range(3):
            step = np.polynomial.polynomial.polyval(r, h) / np.where(
                (den := np.polynomial.polynomial.polyval(r, dh)) == 0, 1.0, den
            )
            r = r - step
        return np.concatenate([r, [0.0]])


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: np.ndarray


def _ascend(obj: LogModulus, starts: np.ndarray) -> list[tuple[float, np.ndarray]]:
    out = []
    for x0 in starts:
        res = minimize(
            lambda x: tuple(-v for v in obj(x)),
            x0,
            jac=True,
            method="BFGS",
            options={"gtol": 1e-9, "maxiter": 500},
        )
        out.append((-float(res.fun), np.asarray(res.x)))
    return out


def weighted_sup_norm(
    P: GaussPoly,
    weight: str = "phi",
    *,
    gradient: bool = False,
    starts: int = 64,
    seed: int = 0,
    return_witness: bool = False,
):
    """sup_x |f(x)| w(x) for f = P or |grad P| and w = phi_k or W_k = e^{-|x|^2}.

    In one dimension the critical points are the real roots of an explicit
    polynomial, so the supremum is computed exactly. Otherwise a multi-start
    BFGS ascent on the log objective is run from the best of a quadrature
    grid and random points in the ball where the maximum must lie.
    """
    if P.dim > 4:
        raise ValueError("weighted sup norm is limited to k <= 4")
    obj = LogModulus(P, weight, gradient)
    k = P.dim
    if not obj.components:
        res = SupResult(0.0, np.zeros(k))
        return res if return_witness else 0.0
    if k == 1:
        cands = obj.critical_points_1d().reshape(-1, 1)
        vals = obj.values(cands)
        i = int(np.argmax(vals))
        res = SupResult(float(vals[i]), cands[i])
        return res if return_witness else res.value
    rng = np.random.default_rng(seed)
    nodes, _ = _gh(16)
    pts, _ = gauss_hermite_rule(16, k).tensor() if 16**k <= 65536 else (None, None)
    radius = math.sqrt(2 * max(P.degree, 1)) + 2
    ball = rng.standard_normal((4096, k))
    ball *= (radius * rng.random(4096) ** (1.0 / k) / np.linalg.norm(ball, axis=1))[:, None]
    cand = np.vstack([pts, ball]) if pts is not None else ball
    vals = obj.values(cand)
    order = np.argsort(-vals)[:starts]
    best = (float(vals[order[0]]), cand[order[0]])
    for logv, x in _ascend(obj, cand[order]):
        v = float(obj.values(x)[0])
        if v > best[0]:
            best = (v, x)
    res = SupResult(best[0], best[1])
    return res if return_witness else res.value
