"""Convex gauges, the lens domain they determine, and complex Markov checks.

A gauge B with B', B'' > 0 has the constant
``c_B = sup_s A(s) + 1/A(s)`` with ``A(s) = s B''(s) / B'(s)``. The lens is
the intersection of the two closed disks ``|z +- i sqrt(c_B - 2)/2| <=
sqrt(c_B + 2)/2``; both circles pass through the corners +-1 and the
exterior angle there is ``pi * alpha_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, minimize_scalar

from .hermite import GaussPoly

PROBE_RANGE = (1e-6, 1e6)
MEMBERSHIP_TOL = 1e-12
PSD_TOL = 1e-12
MARKOV_CONSTANT = 10.0
MAX_LENS_DEGREE = 512


class GaugeError(ValueError):
    """A gauge fails positivity or derivative consistency."""


# ---------------------------------------------------------------------------
# gauges


@dataclass(frozen=True)
class ConvexGauge:
    """B on [0, inf) with B', B'' > 0.

    ``growth_degree`` is the declared N in |B|, |B'|, |B''| <= C(1 + x^{2N});
    ``None`` marks a gauge without polynomial growth, whose checks are
    restricted to ``probe_interval`` and labelled conditional. ``monomials``
    lists (coefficient, exponent) pairs when B is a finite sum of powers.
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray] | None = None
    growth_degree: int | None = None
    probe_interval: tuple[float, float] = PROBE_RANGE
    closed_form_c: float | None = None
    monomials: tuple[tuple[float, float], ...] | None = field(default=None)

    @property
    def conditional(self) -> bool:
        return self.growth_degree is None

    def ratio(self, s) -> np.ndarray:
        """A(s) = s B''(s) / B'(s)."""
        s = np.asarray(s, dtype=float)
        return s * self.d2(s) / self.d1(s)

    # profile R(x) = B(sqrt(x)) used by the flow
    def profile(self, x):
        return self.value(np.sqrt(x))

    def profile_d1(self, x):
        s = np.sqrt(x)
        return self.d1(s) / (2 * s)

    def profile_d2(self, x):
        s = np.sqrt(x)
        return (s * self.d2(s) - self.d1(s)) / (4 * s**3)

    def profile_d3(self, x):
        if self.d3 is None:
            raise GaugeError(f"gauge {self.name!r} has no third derivative")
        s = np.sqrt(x)
        return (s * s * self.d3(s) - 3 * s * self.d2(s) + 3 * self.d1(s)) / (8 * s**5)


def power_gauge(p: float) -> ConvexGauge:
    """B(s) = s^p for p > 1."""
    p = float(p)
    if p <= 1:
        raise GaugeError("power gauges need p > 1 (B'' must be positive)")
    return ConvexGauge(
        name=f"power p={p:g}",
        value=lambda s: np.power(s, p),
        d1=lambda s: p * np.power(s, p - 1),
        d2=lambda s: p * (p - 1) * np.power(s, p - 2),
        d3=lambda s: p * (p - 1) * (p - 2) * np.power(s, p - 3),
        growth_degree=math.ceil(p / 2),
        closed_form_c=((p - 1) ** 2 + 1) / (p - 1),
        monomials=((1.0, p),),
    )


def exp_gauge() -> ConvexGauge:
    """B(s) = e^s - 1; no polynomial growth, so it is probed on (0.1, 10) only."""
    return ConvexGauge(
        name="exp",
        value=np.expm1,
        d1=np.exp,
        d2=np.exp,
        d3=np.exp,
        growth_degree=None,
        probe_interval=(0.1, 10.0),
    )


def polynomial_gauge(terms: tuple[tuple[float, float], ...]) -> ConvexGauge:
    """B(s) = sum a_i s^{e_i} with a_i > 0 and e_i > 1."""
    terms = tuple((float(a), float(e)) for a, e in terms)
    if not terms or any(a <= 0 or e <= 1 for a, e in terms):
        raise GaugeError("polynomial gauges need positive coefficients and exponents > 1")

    def make(order: int):
        def f(s):
            s = np.asarray(s, dtype=float)
            out = np.zeros_like(s)
            for a, e in terms:
                c = a * math.prod(e - i for i in range(order))
                out = out + c * np.power(s, e - order)
            return out

        return f

    label = " + ".join(f"{a:g}*s^{e:g}" for a, e in terms)
    return ConvexGauge(
        name=label,
        value=make(0),
        d1=make(1),
        d2=make(2),
        d3=make(3),
        growth_degree=math.ceil(max(e for _, e in terms) / 2),
        monomials=terms,
    )


NAMED_GAUGES: dict[str, Callable[[], ConvexGauge]] = {
    "exp": exp_gauge,
    "quartic": lambda: polynomial_gauge(((1.0, 2.0), (1.0, 4.0))),
}


def probe_grid(gauge: ConvexGauge, size: int = 10**4) -> np.ndarray:
    lo, hi = gauge.probe_interval
    return np.geomspace(lo, hi, size)


def check_gauge(gauge: ConvexGauge, size: int = 512, rtol: float = 1e-5) -> None:
    """Raise GaugeError unless B', B'' > 0 and both match central differences."""
    s = probe_grid(gauge, size)
    d1, d2 = gauge.d1(s), gauge.d2(s)
    if not (np.all(d1 > 0) and np.all(d2 > 0)):
        raise GaugeError(f"gauge {gauge.name!r} is not strictly increasing and convex")
    h = 1e-4 * s
    fd1 = (gauge.value(s + h) - gauge.value(s - h)) / (2 * h)
    fd2 = (gauge.d1(s + h) - gauge.d1(s - h)) / (2 * h)
    if np.max(np.abs(fd1 - d1) / d1) > rtol or np.max(np.abs(fd2 - d2) / d2) > rtol:
        raise GaugeError(f"gauge {gauge.name!r}: derivatives disagree with finite differences")


def _c_objective(gauge: ConvexGauge, s):
    a = gauge.ratio(s)
    return a + 1.0 / a


def estimate_gauge_constant(gauge: ConvexGauge, size: int = 10**4) -> tuple[float, float]:
    """Grid supremum refined by golden-section search; returns (c_B, refinement delta)."""
    check_gauge(gauge)
    s = probe_grid(gauge, size)
    vals = _c_objective(gauge, s)
    i = int(np.argmax(vals))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
    grid_best = float(vals[i])
    res = minimize_scalar(
        lambda t: -float(_c_objective(gauge, math.exp(t))),
        bracket=None,
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    refined = max(grid_best, -float(res.fun))
    return max(refined, 2.0), refined - grid_best


def gauge_constant(gauge: ConvexGauge) -> float:
    """c_B; closed form for power gauges, grid plus refinement otherwise."""
    if gauge.closed_form_c is not None:
        return float(gauge.closed_form_c)
    return estimate_gauge_constant(gauge)[0]


# ---------------------------------------------------------------------------
# exponents


def _arctan_term(p: float) -> float:
    if p < 1:
        raise ValueError(f"exponent needs p >= 1, got {p}")
    if p == 1:
        return math.pi / 2
    return math.atan(abs(p - 2) / (2 * math.sqrt(p - 1)))


def grad_exponent(p: float) -> float:
    """1/2 + (1/pi) arctan(|p-2| / (2 sqrt(p-1))); equals 1 at p = 1."""
    return 0.5 + _arctan_term(p) / math.pi


def generator_exponent(p: float) -> float:
    """1 + (2/pi) arctan(|p-2| / (2 sqrt(p-1))); equals 2 at p = 1."""
    return 1.0 + 2.0 * _arctan_term(p) / math.pi


# ---------------------------------------------------------------------------
# the lens


@dataclass(frozen=True)
class LensDomain:
    c_B: float
    center_offset: float
    radius: float
    alpha: float

    @classmethod
    def from_constant(cls, c: float) -> "LensDomain":
        if not c >= 2.0 or not math.isfinite(c):
            raise ValueError(f"lens constant must be finite and >= 2, got {c}")
        off = math.sqrt(c - 2.0) / 2.0
        return cls(
            c_B=float(c),
            center_offset=off,
            radius=math.sqrt(c + 2.0) / 2.0,
            alpha=1.0 + 2.0 * math.atan(off) / math.pi,
        )

    @classmethod
    def from_gauge(cls, gauge: ConvexGauge) -> "LensDomain":
        return cls.from_constant(gauge_constant(gauge))

    @classmethod
    def for_power(cls, p: float) -> "LensDomain":
        return cls.from_gauge(power_gauge(p))

    @property
    def is_disk(self) -> bool:
        return self.c_B == 2.0

    @property
    def centers(self) -> tuple[complex, complex]:
        return (1j * self.center_offset, -1j * self.center_offset)

    @property
    def corner_angle(self) -> float:
        """Half-opening of the upper arc seen from its centre, atan(offset)."""
        return math.atan2(self.center_offset, 1.0)

    def boundary(self, tau) -> np.ndarray:
        """Closed boundary curve for tau in [0, 2): upper arc 1 -> -1, lower arc -1 -> 1."""
        tau = np.asarray(tau, dtype=float)
        th0 = self.corner_angle
        span = math.pi - 2 * th0
        upper = tau < 1
        t = np.where(upper, tau, 2.0 - tau)
        z = -1j * self.center_offset + self.radius * np.exp(1j * (th0 + t * span))
        return np.where(upper, z, np.conj(z))

    def to_dict(self) -> dict:
        return {
            "c_B": self.c_B,
            "center_offset": self.center_offset,
            "radius": self.radius,
            "alpha": self.alpha,
        }


def lens_margin(z, lens: LensDomain) -> np.ndarray:
    """radius - max |z -+ i offset|; nonnegative exactly on the closed lens."""
    z = np.asarray(z, dtype=complex)
    off = 1j * lens.center_offset
    return lens.radius - np.maximum(np.abs(z - off), np.abs(z + off))


def in_lens(z, lens: LensDomain):
    """Membership with +1e-12 slack on the radii, so the corners are always inside."""
    out = lens_margin(z, lens) >= -MEMBERSHIP_TOL
    return bool(out) if np.ndim(out) == 0 else out


def in_lens_algebraic(z, lens: LensDomain):
    """The same set written as |y| sqrt(c_B - 2) <= 1 - x^2 - y^2."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    out = np.abs(y) * math.sqrt(lens.c_B - 2.0) <= 1.0 - x * x - y * y + MEMBERSHIP_TOL
    return bool(out) if np.ndim(out) == 0 else out


def psd_matrix(A, z: complex) -> np.ndarray:
    """[[A - A x^2 - y^2, xy(A-1)], [xy(A-1), 1 - A y^2 - x^2]] stacked over A."""
    A = np.asarray(A, dtype=float)
    x, y = complex(z).real, complex(z).imag
    M = np.empty(A.shape + (2, 2))
    M[..., 0, 0] = A - A * x * x - y * y
    M[..., 1, 1] = 1.0 - A * y * y - x * x
    M[..., 0, 1] = M[..., 1, 0] = x * y * (A - 1.0)
    return M


def psd_condition(gauge: ConvexGauge, z: complex, s) -> np.ndarray | bool:
    """PSD test of the 2x2 matrix at A = s B''(s)/B'(s), via trace and determinant."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("psd_condition needs s > 0")
    M = psd_matrix(gauge.ratio(s), z)
    tr = M[..., 0, 0] + M[..., 1, 1]
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] ** 2
    out = (tr >= -PSD_TOL) & (det >= -PSD_TOL)
    return bool(out) if np.ndim(out) == 0 else out


def psd_everywhere(gauge: ConvexGauge, z: complex, size: int = 10**3) -> bool:
    return bool(np.all(psd_condition(gauge, z, probe_grid(gauge, size))))


# ---------------------------------------------------------------------------
# conformal map of the lens exterior onto the disk exterior


def _phi(w, alpha: float) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (w + 1) / (w - 1)
        v = u ** (1.0 / alpha)
        out = (v + 1) / (v - 1)
    return np.where(w == 1, 1.0 + 0j, out)


def conformal_map(w, lens: LensDomain):
    """phi = phi3 o phi2 o phi1 with phi1 = phi3 = (z+1)/(z-1) and phi2 = z^(1/alpha).

    The principal branch of phi2 is the right one since phi1 sends the lens
    exterior into the sector |arg| <= pi alpha / 2. At the corner w = 1 the
    composition has the finite limit 1, which is returned.
    """
    w_arr = np.asarray(w, dtype=complex)
    if np.any(lens_margin(w_arr, lens) > MEMBERSHIP_TOL):
        raise ValueError("conformal_map is defined on the lens exterior only")
    if lens.is_disk:
        out = w_arr.copy()
    else:
        out = _phi(w_arr, lens.alpha)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sup norm on the lens and the Markov inequality at the corner


def _check_coeffs(coeffs) -> np.ndarray:
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if len(c) - 1 > MAX_LENS_DEGREE:
        raise ValueError(f"degree exceeds the cap {MAX_LENS_DEGREE}")
    return c if len(c) else np.zeros(1, dtype=complex)


def boundary_samples(lens: LensDomain, degree: int, per_arc: int = 4096) -> np.ndarray:
    """Parameters tau of uniform arc samples plus a corner cluster of angular width 1/degree."""
    u = np.arange(per_arc) / per_arc
    span = math.pi - 2 * lens.corner_angle
    width = min(1.0 / max(degree, 1), span) / span
    cluster = np.linspace(0.0, width, 1024)
    base = np.concatenate([u, cluster, 1 - cluster])
    return np.unique(np.concatenate([base % 1.0, 1.0 + base % 1.0]))


def _polyval(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(z, coeffs)


def lens_sup_norm(coeffs, lens: LensDomain, per_arc: int = 4096, levels: int = 3) -> float:
    """max |P| over the lens boundary, a lower bound for the true supremum.

    ``coeffs`` are monomial coefficients, lowest degree first.
    """
    c = _check_coeffs(coeffs)
    n = len(c) - 1
    tau = boundary_samples(lens, n, per_arc)
    vals = np.abs(_polyval(c, lens.boundary(tau)))
    i = int(np.argmax(vals))
    best, t_best = float(vals[i]), float(tau[i])
    step = 1.0 / per_arc
    for _ in range(levels):
        local = (t_best + np.linspace(-step, step, 65)) % 2.0
        v = np.abs(_polyval(c, lens.boundary(local)))
        j = int(np.argmax(v))
        if v[j] > best:
            best, t_best = float(v[j]), float(local[j])
        step /= 32
    return best


def lens_sup_norm_batch(C: np.ndarray, lens: LensDomain, per_arc: int = 4096) -> np.ndarray:
    """Unrefined boundary maxima for the rows of a coefficient matrix."""
    C = np.asarray(C, dtype=complex)
    tau = boundary_samples(lens, C.shape[1] - 1, per_arc)
    Z = lens.boundary(tau)
    V = np.vander(Z, C.shape[1], increasing=True)
    out = np.zeros(len(C))
    for lo in range(0, len(C), 256):
        out[lo : lo + 256] = np.abs(V @ C[lo : lo + 256].T).max(axis=0)
    return out


@dataclass(frozen=True)
class MarkovCheck:
    lhs: float
    rhs: float
    ok: bool


def markov_at_one(coeffs, lens: LensDomain) -> MarkovCheck:
    """|P'(1)| against 10 n^alpha sup_lens |P|."""
    c = _check_coeffs(coeffs)
    n = len(c) - 1
    if n < 1:
        raise ValueError("markov_at_one needs degree >= 1")
    lhs = abs(complex(np.polynomial.polynomial.polyval(1.0, np.polynomial.polynomial.polyder(c))))
    rhs = MARKOV_CONSTANT * n**lens.alpha * lens_sup_norm(c, lens)
    return MarkovCheck(lhs, rhs, lhs <= rhs * (1 + 1e-9))


def markov_batch(C: np.ndarray, lens: LensDomain) -> tuple[np.ndarray, np.ndarray]:
    """(lhs, rhs) arrays for rows of C, refining the sup only where it matters."""
    C = np.asarray(C, dtype=complex)
    n = C.shape[1] - 1
    lhs = np.abs(C[:, 1:] @ np.arange(1, n + 1))
    sup = lens_sup_norm_batch(C, lens)
    rhs = MARKOV_CONSTANT * n**lens.alpha * sup
    for i in np.flatnonzero(lhs > rhs * (1 + 1e-9)):
        rhs[i] = MARKOV_CONSTANT * n**lens.alpha * lens_sup_norm(C[i], lens)
    return lhs, rhs


@dataclass(frozen=True)
class TechnicalBound:
    observed: float
    bound: float
    ok: bool


def technical_bound(gamma: float, delta: float, points: int = 2048) -> TechnicalBound:
    """max over |theta| <= gamma/2 of |phi(1 + delta e^{i pi theta})| with alpha = gamma."""
    if not 1.0 <= gamma <= 2.0:
        raise ValueError("gamma must lie in [1, 2]")
    if not 0.0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 1/10)")
    theta = np.linspace(-gamma / 2, gamma / 2, points)
    w = 1.0 + delta * np.exp(1j * math.pi * theta)
    observed = float(np.max(np.abs(_phi(w, gamma))))
    bound = 1.0 + 2.0 * delta ** (1.0 / gamma)
    return TechnicalBound(observed, bound, observed <= bound + 1e-9)


# ---------------------------------------------------------------------------
# discrete measure representing P -> P'(1)

POLYGON_SIDES = 16


@dataclass(frozen=True)
class MomentMeasure:
    points: np.ndarray
    masses: np.ndarray
    tv: float
    tv_exact: float
    residual: float

    def apply(self, coeffs) -> complex:
        """sum_j mu_j P(z_j) for monomial coefficients of P."""
        return complex(self.masses @ _polyval(np.asarray(coeffs, dtype=complex), self.points))

    def apply_mehler(self, P: GaussPoly) -> GaussPoly:
        """sum_j mu_j T_{z_j} P, computed coefficientwise."""
        moments = {}
        out = {}
        for a, c in P.coeffs.items():
            d = sum(a)
            if d not in moments:
                moments[d] = complex(self.masses @ self.points**d)
            out[a] = moments[d] * c
        return GaussPoly(P.dim, out)


def lens_nodes(lens: LensDomain, M: int) -> np.ndarray:
    """M boundary points clustered towards the corners, including +-1."""
    half = M // 2
    u = np.arange(half) / half
    tau_arc = 0.5 * (1 - np.cos(math.pi * u))
    tau = np.concatenate([tau_arc, 1.0 + tau_arc])
    return lens.boundary(tau)


def moment_measure(n: int, lens: LensDomain, M: int | None = None) -> MomentMeasure:
    """Minimal total variation measure on M boundary nodes with int z^l dmu = l, l <= n.

    |mu_j| is replaced by the largest of 16 rotated real parts, which turns
    the problem into a linear program; the reported ``tv`` is that polygonal
    value and ``tv_exact`` is sum_j |mu_j| of the returned masses.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        z = lens_nodes(lens, 4)
        return MomentMeasure(z, np.zeros(len(z), dtype=complex), 0.0, 0.0, 0.0)
    if M is None:
        M = max(64, 16 * n)
    if M < 4 * n:
        raise ValueError("need at least 4n boundary nodes")
    z = lens_nodes(lens, M)
    M = len(z)
    powers = z[None, :] ** np.arange(n + 1)[:, None]
    target = np.arange(n + 1, dtype=float)
    A_eq = np.block(
        [
            [powers.real, -powers.imag, np.zeros((n + 1, M))],
            [powers.imag, powers.real, np.zeros((n + 1, M))],
        ]
    )
    b_eq = np.concatenate([target, np.zeros(n + 1)])
    ang = 2 * math.pi * np.arange(POLYGON_SIDES) / POLYGON_SIDES
    eye = sparse.identity(M, format="csr")
    A_ub = sparse.vstack(
        [sparse.hstack([math.cos(a) * eye, math.sin(a) * eye, -eye]) for a in ang]
    ).tocsr()
    cost = np.concatenate([np.zeros(2 * M), np.ones(M)])
    bounds = [(None, None)] * (2 * M) + [(0, None)] * M
    res = linprog(
        cost,
        A_ub=A_ub,
        b_ub=np.zeros(A_ub.shape[0]),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"moment LP failed ({res.message}); increase M")
    mu = res.x[:M] + 1j * res.x[M : 2 * M]
    # least-norm correction on the support removes solver-level residuals
    support = np.flatnonzero(np.abs(mu) > 1e-12 * np.abs(mu).max())
    V = powers[:, support]
    fix = np.linalg.lstsq(V, target - powers @ mu, rcond=None)[0]
    mu[support] += fix
    residual = float(np.max(np.abs(powers @ mu - target)))
    if residual > 1e-8:
        raise RuntimeError(f"moment constraints violated by {residual:.2e}")
    return MomentMeasure(z, mu, float(res.fun), float(np.abs(mu).sum()), residual)
