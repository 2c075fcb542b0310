"""Diagonal Ornstein-Uhlenbeck operators and the Gaussian smoothing flow."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .hermite import GaussPoly, MonoPoly


def ou_generator(poly: GaussPoly) -> GaussPoly:
    """L = Laplacian - x.grad, acting as c_alpha -> -|alpha| c_alpha."""
    return GaussPoly(poly.dim, {a: -sum(a) * c for a, c in poly.coeffs.items()})


def ou_generator_calculus(poly: MonoPoly) -> MonoPoly:
    """Laplacian(P) - x.grad(P) computed directly on monomials."""
    return poly.laplacian() - poly.euler()


def sqrt_minus_L(poly: GaussPoly) -> GaussPoly:
    """(-L)^(1/2): c_alpha -> |alpha|^(1/2) c_alpha."""
    return GaussPoly(
        poly.dim, {a: math.sqrt(sum(a)) * c for a, c in poly.coeffs.items()}
    )


def mehler(poly: GaussPoly, z: complex) -> GaussPoly:
    """Second quantization T_z: c_alpha -> z^|alpha| c_alpha."""
    z = complex(z)
    return GaussPoly(poly.dim, {a: z ** sum(a) * c for a, c in poly.coeffs.items()})


@dataclass(frozen=True)
class FlowPoint:
    s: float
    z: complex

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"flow time s must lie in [0, 1], got {self.s}")
        object.__setattr__(self, "z", complex(self.z))


@lru_cache(maxsize=None)
def double_factorial(n: int) -> int:
    """n!! with the convention (-1)!! = 0!! = 1."""
    return 1 if n <= 0 else n * double_factorial(n - 2)


def _smoothed_power(m: int, z: complex, tau: complex) -> dict[tuple[int, int], complex]:
    """E[(u + z x + xi)^m] as a polynomial in (x, u).

    xi = i(v + z y) with v ~ N(0, s), y ~ N(0, 1-s) independent, so its
    moments are those of a centred Gaussian with complex variance -tau:
    E xi^(2r) = (-tau)^r (2r-1)!!, odd moments vanish.
    """
    out: dict[tuple[int, int], complex] = {}
    for r in range(0, m + 1, 2):
        moment = math.comb(m, r) * double_factorial(r - 1) * (-tau) ** (r // 2)
        e = m - r
        for i in range(e + 1):
            key = (i, e - i)  # (power of x, power of u)
            out[key] = out.get(key, 0j) + moment * math.comb(e, i) * z**i
    return {key: c for key, c in out.items() if c != 0}


def gaussian_smooth(g: MonoPoly, point: FlowPoint) -> MonoPoly:
    """The flow g(x, u, s) = E g((u + iv) + z(x + iy)) in closed form.

    v ~ N(0, s I_k), y ~ N(0, (1-s) I_k). The result is a polynomial on
    R^{2k} with variables ordered (x_1..x_k, u_1..u_k).
    """
    if not isinstance(point, FlowPoint):
        point = FlowPoint(*point)
    k = g.dim
    z = point.z
    tau = point.s + z * z * (1.0 - point.s)
    cache: dict[int, list[tuple[tuple[int, int], complex]]] = {}

    def axis(m: int):
        if m not in cache:
            cache[m] = list(_smoothed_power(m, z, tau).items())
        return cache[m]

    out: dict[tuple[int, ...], complex] = {}
    for beta, c in g.coeffs.items():
        for combo in product(*(axis(m) for m in beta)):
            xs = tuple(key[0] for key, _ in combo)
            us = tuple(key[1] for key, _ in combo)
            w = c
            for _, v in combo:
                w *= v
            key = xs + us
            out[key] = out.get(key, 0j) + w
    return MonoPoly(2 * k, out)
