"""Sparse multivariate polynomials over C in the probabilists' Hermite basis.

``GaussPoly`` stores coefficients against H_alpha(x) = prod_j H_{alpha_j}(x_j),
``MonoPoly`` against plain monomials x^alpha. Both are immutable; arithmetic
returns new objects. Basis changes go through exact integer connection
coefficients, so round trips lose nothing beyond float rounding.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from itertools import combinations_with_replacement, product
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

MAX_AXIS_DEGREE = 64
PRUNE_RTOL = 1e-14

MultiIndex = tuple[int, ...]


class DimensionError(ValueError):
    """Operands live on different R^k."""


class DegreeCapError(ValueError):
    """A per-axis degree exceeds MAX_AXIS_DEGREE."""


# ---------------------------------------------------------------------------
# one-dimensional connection coefficients


@lru_cache(maxsize=None)
def hermite_1d(m: int) -> tuple[int, ...]:
    """Monomial coefficients of H_m, lowest power first.

    Uses H_{m+1}(s) = s H_m(s) - m H_{m-1}(s) with H_0 = 1, H_1 = s, in exact
    integer arithmetic.
    """
    if m < 0:
        raise ValueError(f"Hermite degree must be nonnegative, got {m}")
    if m == 0:
        return (1,)
    if m == 1:
        return (0, 1)
    prev, cur = hermite_1d(m - 2), hermite_1d(m - 1)
    out = [0] + list(cur)
    for i, c in enumerate(prev):
        out[i] -= (m - 1) * c
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_1d(m: int) -> tuple[int, ...]:
    """Hermite coefficients of s^m, indexed by Hermite degree.

    s^m = sum_j m! / (j! (m-2j)! 2^j) H_{m-2j}(s).
    """
    if m < 0:
        raise ValueError(f"degree must be nonnegative, got {m}")
    out = [0] * (m + 1)
    for j in range(m // 2 + 1):
        out[m - 2 * j] = math.factorial(m) // (
            math.factorial(j) * math.factorial(m - 2 * j) * 2**j
        )
    return tuple(out)


@lru_cache(maxsize=None)
def hermite_matrix(n: int) -> np.ndarray:
    """Row m holds the monomial coefficients of H_m, for m = 0..n."""
    out = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        out[m, : m + 1] = hermite_1d(m)
    out.setflags(write=False)
    return out


def hermite_table(x, degree: int) -> np.ndarray:
    """Values H_0(x), ..., H_degree(x) stacked along a new first axis."""
    x = np.asarray(x)
    dtype = np.result_type(x.dtype, np.float64)
    out = np.empty((degree + 1,) + x.shape, dtype=dtype)
    out[0] = 1.0
    if degree >= 1:
        out[1] = x
    for m in range(1, degree):
        out[m + 1] = x * out[m] - m * out[m - 1]
    return out


def power_table(x, degree: int) -> np.ndarray:
    """Values x^0, ..., x^degree stacked along a new first axis."""
    x = np.asarray(x)
    dtype = np.result_type(x.dtype, np.float64)
    out = np.empty((degree + 1,) + x.shape, dtype=dtype)
    out[0] = 1.0
    for m in range(degree):
        out[m + 1] = out[m] * x
    return out


def multi_indices(k: int, n: int) -> list[MultiIndex]:
    """All alpha in N^k with |alpha| <= n, graded then lexicographic."""
    out: list[MultiIndex] = []
    for total in range(n + 1):
        level = []
        for combo in combinations_with_replacement(range(k), total):
            alpha = [0] * k
            for j in combo:
                alpha[j] += 1
            level.append(tuple(alpha))
        out.extend(sorted(level, reverse=True))
    return out


def multi_factorial(alpha: Iterable[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


# ---------------------------------------------------------------------------
# sparse polynomial containers


def _prune(coeffs: dict[MultiIndex, complex]) -> dict[MultiIndex, complex]:
    if not coeffs:
        return coeffs
    top = max(abs(c) for c in coeffs.values())
    if top == 0:
        return {}
    cut = PRUNE_RTOL * top
    return {a: c for a, c in coeffs.items() if abs(c) >= cut}


class _SparsePoly:
    basis = ""
    __slots__ = ("dim", "_coeffs", "_hash")

    def __init__(self, dim: int, coeffs: Mapping[MultiIndex, complex] | None = None):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        clean: dict[MultiIndex, complex] = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim:
                raise DimensionError(f"multi-index {alpha} does not have length {dim}")
            if min(alpha) < 0:
                raise ValueError(f"negative exponent in {alpha}")
            if max(alpha) > MAX_AXIS_DEGREE:
                raise DegreeCapError(
                    f"axis degree {max(alpha)} exceeds cap {MAX_AXIS_DEGREE}"
                )
            c = complex(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0j) + c
        self.dim = dim
        self._coeffs = MappingProxyType(_prune(clean))
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value: complex, dim: int = 1):
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def zero(cls, dim: int = 1):
        return cls(dim)

    @classmethod
    def basis_element(cls, alpha: Iterable[int], coeff: complex = 1.0):
        alpha = tuple(alpha)
        return cls(len(alpha), {alpha: coeff})

    @classmethod
    def from_dense(cls, dim: int, alphas: list[MultiIndex], values) -> "_SparsePoly":
        return cls(dim, dict(zip(alphas, np.asarray(values).tolist())))

    # read-only views ----------------------------------------------------------
    @property
    def coeffs(self) -> Mapping[MultiIndex, complex]:
        return self._coeffs

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self._coeffs), default=-1)

    def axis_degrees(self) -> tuple[int, ...]:
        if not self._coeffs:
            return (0,) * self.dim
        return tuple(max(a[j] for a in self._coeffs) for j in range(self.dim))

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self._coeffs.values())

    def terms(self) -> list[tuple[MultiIndex, complex]]:
        return sorted(self._coeffs.items(), key=lambda t: (sum(t[0]), t[0]))

    def dense(self, alphas: list[MultiIndex]) -> np.ndarray:
        """Coefficient vector against ``alphas`` (terms outside it are dropped)."""
        return np.array([self._coeffs.get(a, 0j) for a in alphas], dtype=complex)

    def coefficient_tensor(self, shape: tuple[int, ...] | None = None) -> np.ndarray:
        """Dense array with ``T[alpha] = c_alpha``."""
        if shape is None:
            shape = tuple(d + 1 for d in self.axis_degrees())
        out = np.zeros(shape, dtype=complex)
        for alpha, c in self._coeffs.items():
            out[alpha] = c
        return out

    # value semantics ------------------------------------------------------
    def _check(self, other: "_SparsePoly") -> None:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.dim == other.dim and dict(self._coeffs) == dict(other._coeffs)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, self.dim, frozenset(self._coeffs.items())))
        return self._hash

    def allclose(self, other: "_SparsePoly", rtol: float = 1e-12) -> bool:
        """Coefficientwise agreement relative to the largest coefficient."""
        self._check(other)
        keys = set(self._coeffs) | set(other._coeffs)
        scale = max(
            [abs(c) for c in self._coeffs.values()] + [abs(c) for c in other._coeffs.values()],
            default=0.0,
        )
        return all(
            abs(self._coeffs.get(a, 0j) - other._coeffs.get(a, 0j)) <= rtol * scale
            for a in keys
        )

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = type(self).constant(other, self.dim)
        self._check(other)
        out = dict(self._coeffs)
        for a, c in other._coeffs.items():
            out[a] = out.get(a, 0j) + c
        return type(self)(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: complex):
        return type(self)(self.dim, {a: factor * c for a, c in self._coeffs.items()})

    def conj(self):
        """Conjugate coefficients; equals the pointwise conjugate for real x."""
        return type(self)(self.dim, {a: c.conjugate() for a, c in self._coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(complex(other))
        return NotImplemented

    def __repr__(self) -> str:
        shown = ", ".join(f"{a}: {c:.6g}" for a, c in self.terms()[:6])
        more = " ..." if len(self._coeffs) > 6 else ""
        return f"{type(self).__name__}(dim={self.dim}, {{{shown}{more}}})"

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "basis": self.basis,
            "terms": [
                {"alpha": list(a), "re": c.real, "im": c.imag} for a, c in self.terms()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping):
        if data.get("basis") != cls.basis:
            raise ValueError(f"expected basis {cls.basis!r}, got {data.get('basis')!r}")
        return cls(
            int(data["dim"]),
            {tuple(t["alpha"]): complex(t["re"], t.get("im", 0.0)) for t in data["terms"]},
        )

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    # evaluation -----------------------------------------------------------
    def _table(self, x, degree: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Value at a point of length k, or at each row of an (N, k) array."""
        pts = np.asarray(x)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionError(f"point has {pts.shape[1]} coordinates, expected {self.dim}")
        if not self._coeffs:
            out = np.zeros(len(pts), dtype=complex)
            return out[0] if single else out
        alphas = np.array(list(self._coeffs), dtype=int)
        cvec = np.array(list(self._coeffs.values()), dtype=complex)
        degs = alphas.max(axis=0)
        tables = [self._table(pts[:, j], int(degs[j])) for j in range(self.dim)]
        out = np.empty(len(pts), dtype=complex)
        # chunk points to bound the (terms x points) work array
        step = max(1, 2**20 // len(cvec))
        for lo in range(0, len(pts), step):
            hi = min(lo + step, len(pts))
            acc = np.ones((len(cvec), hi - lo), dtype=complex)
            for j in range(self.dim):
                acc *= tables[j][alphas[:, j], lo:hi]
            out[lo:hi] = cvec @ acc
        return out[0] if single else out


class MonoPoly(_SparsePoly):
    """Sparse polynomial in the monomial basis x^alpha."""

    basis = "monomial"
    __slots__ = ()

    def _table(self, x, degree):
        return power_table(x, degree)

    def __mul__(self, other):
        if isinstance(other, MonoPoly):
            self._check(other)
            out: dict[MultiIndex, complex] = {}
            for a, ca in self._coeffs.items():
                for b, cb in other._coeffs.items():
                    key = tuple(i + j for i, j in zip(a, b))
                    out[key] = out.get(key, 0j) + ca * cb
            return MonoPoly(self.dim, out)
        return super().__mul__(other)

    def __pow__(self, e: int) -> "MonoPoly":
        out = MonoPoly.constant(1.0, self.dim)
        for _ in range(e):
            out = out * self
        return out

    def partial(self, j: int) -> "MonoPoly":
        out = {}
        for a, c in self._coeffs.items():
            if a[j]:
                b = list(a)
                b[j] -= 1
                out[tuple(b)] = a[j] * c
        return MonoPoly(self.dim, out)

    def gradient(self) -> list["MonoPoly"]:
        return [self.partial(j) for j in range(self.dim)]

    def laplacian(self) -> "MonoPoly":
        out: dict[MultiIndex, complex] = {}
        for a, c in self._coeffs.items():
            for j in range(self.dim):
                if a[j] >= 2:
                    b = list(a)
                    b[j] -= 2
                    b = tuple(b)
                    out[b] = out.get(b, 0j) + a[j] * (a[j] - 1) * c
        return MonoPoly(self.dim, out)

    def euler(self) -> "MonoPoly":
        """x . grad P, which scales each monomial by its total degree."""
        return MonoPoly(self.dim, {a: sum(a) * c for a, c in self._coeffs.items()})

    def to_hermite(self) -> "GaussPoly":
        return to_hermite(self)


class GaussPoly(_SparsePoly):
    """Sparse polynomial in the Hermite basis H_alpha."""

    basis = "hermite"
    __slots__ = ()

    def _table(self, x, degree):
        return hermite_table(x, degree)

    def __mul__(self, other):
        if isinstance(other, GaussPoly):
            self._check(other)
            return to_hermite(to_monomial(self) * to_monomial(other))
        return super().__mul__(other)

    def partial(self, j: int) -> "GaussPoly":
        """d/dx_j, using H_m' = m H_{m-1}."""
        if not 0 <= j < self.dim:
            raise IndexError(j)
        out = {}
        for a, c in self._coeffs.items():
            if a[j]:
                b = list(a)
                b[j] -= 1
                out[tuple(b)] = a[j] * c
        return GaussPoly(self.dim, out)

    def gradient(self) -> list["GaussPoly"]:
        return [self.partial(j) for j in range(self.dim)]

    def parseval_norm2(self) -> float:
        return parseval_norm2(self)

    def to_monomial(self) -> MonoPoly:
        return to_monomial(self)

    def embed(self, dim: int) -> "GaussPoly":
        """Same polynomial viewed on R^dim (dim >= self.dim), padding with zeros."""
        if dim < self.dim:
            raise DimensionError("cannot embed into a smaller dimension")
        pad = (0,) * (dim - self.dim)
        return GaussPoly(dim, {a + pad: c for a, c in self._coeffs.items()})


# ---------------------------------------------------------------------------
# module-level operations


def _change_basis(poly: _SparsePoly, table_fn, target: type) -> _SparsePoly:
    out: dict[MultiIndex, complex] = {}
    for alpha, c in poly.coeffs.items():
        per_axis = [
            [(i, v) for i, v in enumerate(table_fn(a)) if v != 0] for a in alpha
        ]
        for combo in product(*per_axis):
            key = tuple(i for i, _ in combo)
            weight = math.prod(v for _, v in combo)
            out[key] = out.get(key, 0j) + c * weight
    return target(poly.dim, out)


def to_monomial(poly: GaussPoly) -> MonoPoly:
    """Exact Hermite-to-monomial basis change."""
    if not isinstance(poly, GaussPoly):
        raise TypeError("to_monomial expects a GaussPoly")
    return _change_basis(poly, hermite_1d, MonoPoly)


def to_hermite(poly: MonoPoly) -> GaussPoly:
    """Exact monomial-to-Hermite basis change."""
    if not isinstance(poly, MonoPoly):
        raise TypeError("to_hermite expects a MonoPoly")
    return _change_basis(poly, monomial_1d, GaussPoly)


def poly_arith(p: GaussPoly, q, op: str) -> GaussPoly:
    """``op`` is one of "add", "mul", "scale" (q is then a scalar)."""
    if op == "add":
        return p + q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown operation {op!r}")


def evaluate(poly: _SparsePoly, x):
    return poly.evaluate(x)


def gradient(poly: GaussPoly) -> list[GaussPoly]:
    return poly.gradient()


def parseval_norm2(poly: GaussPoly) -> float:
    """L^2(gamma_k) norm from coefficients: (sum |c_alpha|^2 alpha!)^(1/2)."""
    total = math.fsum(abs(c) ** 2 * multi_factorial(a) for a, c in poly.coeffs.items())
    return math.sqrt(total)


def hermitization(g: MonoPoly) -> GaussPoly:
    """Reinterpret monomial coefficients as Hermite coefficients (x^alpha -> H_alpha)."""
    return GaussPoly(g.dim, dict(g.coeffs))


def monomial_shadow(p: GaussPoly) -> MonoPoly:
    """Inverse of :func:`hermitization`."""
    return MonoPoly(p.dim, dict(p.coeffs))
