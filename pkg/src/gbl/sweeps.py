"""Seeded randomized sweeps that turn single verdicts into suite reports.

Every trial draws from its own counter-based generator, keyed by the sweep
seed and addressed by (suite, cell, trial index), so results do not depend on
how trials are split across worker processes. L^p suites evaluate whole
batches with fixed Gauss-Hermite rules and only re-run trials whose verdict
is too close to call on the accurate single-polynomial path.
"""

from __future__ import annotations

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .flow import hyp3_check, inf1_check, monotonicity_scan, necessity_witness
from .hermite import GaussPoly, multi_factorial, multi_indices
from .inequalities import (
    CONSTANT_LUSTP,
    CONSTANT_MTH03,
    EMPIRICAL_CEILING,
    InequalityVerdict,
    TrigPoly,
    gaussian_abs_moment,
    make_verdict,
    restricted_range_check,
    riesz_ratio_probe,
    verify_freud_1d,
    verify_freud_infty,
    verify_lustp,
    verify_mth02,
    verify_mth03,
    verify_mth04,
    real_up_to_phase,
    verify_rot2,
    zygmund_trig_check,
)
from .integration import NormResult, _inexact, batch_moments, coefficient_tensors
from .lens import (
    MARKOV_CONSTANT,
    NAMED_GAUGES,
    ConvexGauge,
    LensDomain,
    generator_exponent,
    grad_exponent,
    in_lens,
    lens_margin,
    markov_batch,
    moment_measure,
    power_gauge,
    technical_bound,
)

CSV_COLUMNS = ("name", "k", "n", "p", "lhs", "rhs", "ratio", "ok")
ENSEMBLES = ("complex", "real", "single", "lacunary", "low")
CHUNK = 250
LENS_BAND = 1e-10
MOMENT_TOL = 1e-6


class UnknownSuiteError(KeyError):
    pass


# ---------------------------------------------------------------------------
# rows and reports


@dataclass(frozen=True)
class Row:
    """One CSV line; ``hard`` rows decide the exit code."""

    name: str
    k: int
    n: int
    p: str
    lhs: float
    rhs: float
    ratio: float
    ok: bool
    conclusive: bool = True
    hard: bool = True
    label: str = ""

    @property
    def ok_field(self) -> str:
        if not self.conclusive:
            return "inconclusive"
        return "true" if self.ok else "false"

    def csv_fields(self) -> list[str]:
        return [
            self.name,
            str(self.k),
            str(self.n),
            self.p,
            repr(float(self.lhs)),
            repr(float(self.rhs)),
            repr(float(self.ratio)),
            self.ok_field,
        ]


def row_from_verdict(v: InequalityVerdict, k: int, n: int, p: str, hard: bool = True) -> Row:
    hard = hard and v.label not in ("complex", "conditional", "degenerate", "divergent")
    return Row(v.name, k, n, p, v.lhs, v.rhs, v.ratio, v.ok, v.conclusive, hard, v.label)


@dataclass
class SuiteReport:
    suite: str
    rows: list[Row]
    runtime: float

    @property
    def pass_count(self) -> int:
        return int(sum(bool(r.conclusive and r.ok) for r in self.rows))

    @property
    def fail_count(self) -> int:
        return int(sum(bool(r.conclusive and not r.ok) for r in self.rows))

    @property
    def hard_fail_count(self) -> int:
        return int(sum(bool(r.conclusive and not r.ok and r.hard) for r in self.rows))

    @property
    def inconclusive_count(self) -> int:
        return int(sum(bool(not r.conclusive) for r in self.rows))

    @property
    def worst_ratio(self) -> float:
        vals = [r.ratio for r in self.rows if math.isfinite(r.ratio)]
        return max(vals) if vals else math.nan

    def exit_code(self) -> int:
        if self.hard_fail_count:
            return 1
        return 2 if self.inconclusive_count else 0

    def summary(self) -> dict:
        return {
            "schema": "gbl.summary/1",
            "suite": self.suite,
            "pass_count": self.pass_count,
            "fail_count": self.fail_count,
            "hard_fail_count": self.hard_fail_count,
            "inconclusive_count": self.inconclusive_count,
            "worst_ratio": self.worst_ratio,
            "runtime": self.runtime,
        }


# ---------------------------------------------------------------------------
# randomness


def trial_rng(seed: int, suite: str, cell: str, trial: int) -> np.random.Generator:
    """Philox stream addressed by (seed, suite/cell, trial)."""
    tag = zlib.crc32(f"{suite}/{cell}".encode())
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, tag, trial]))


@lru_cache(maxsize=None)
def _basis(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    alphas = multi_indices(k, n)
    order = np.array([sum(a) for a in alphas])
    fact = np.array([float(multi_factorial(a)) for a in alphas])
    return order, fact


def random_coefficients(rng: np.random.Generator, k: int, n: int, ensemble: str = "complex") -> np.ndarray:
    """Hermite coefficients over multi_indices(k, n), of degree exactly n and unit Parseval norm."""
    order, fact = _basis(k, n)
    size = len(order)
    if ensemble == "complex":
        c = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)
    elif ensemble == "real":
        c = rng.standard_normal(size).astype(complex)
    elif ensemble == "single":
        c = np.zeros(size, dtype=complex)
        c[rng.choice(np.flatnonzero(order == n))] = 1.0
    elif ensemble == "lacunary":
        levels = {0, n} | {2**j for j in range(n.bit_length()) if 2**j <= n}
        mask = np.isin(order, sorted(levels))
        c = np.where(mask, rng.standard_normal(size) + 1j * rng.standard_normal(size), 0)
    elif ensemble == "low":
        # orthonormal coordinates decaying like 4^{-|alpha|}
        b = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * 4.0 ** (-order)
        c = b / np.sqrt(fact)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES} or 'mixed'")
    return c / math.sqrt(float(np.sum(np.abs(c) ** 2 * fact)))


def _ensemble(name: str, trial: int) -> str:
    return ENSEMBLES[trial % len(ENSEMBLES)] if name == "mixed" else name


def random_poly(rng: np.random.Generator, k: int, n: int, ensemble: str = "complex") -> GaussPoly:
    return GaussPoly.from_dense(k, multi_indices(k, n), random_coefficients(rng, k, n, ensemble))


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Cell:
    """One (suite, k, n, p or gauge) combination of a sweep."""

    suite: str
    k: int
    n: int
    p: float | None = None
    gauge: str | None = None
    c: float | None = None
    seed: int = 0
    ensemble: str = "mixed"
    ceiling: float = EMPIRICAL_CEILING
    radius_kind: str = "half"

    @property
    def key(self) -> str:
        return f"k={self.k}/n={self.n}/p={self.p}/g={self.gauge}/c={self.c}"

    @property
    def p_label(self) -> str:
        if self.gauge is not None:
            return self.gauge
        if self.c is not None and self.p is None:
            return f"c={self.c:g}"
        return f"{self.p:g}" if self.p is not None else ""

    def rng(self, trial: int) -> np.random.Generator:
        return trial_rng(self.seed, self.suite, self.key, trial)

    def poly(self, trial: int, rng: np.random.Generator | None = None) -> GaussPoly:
        rng = rng or self.rng(trial)
        return random_poly(rng, self.k, self.n, _ensemble(self.ensemble, trial))

    def make_gauge(self) -> ConvexGauge:
        if self.gauge is not None:
            return gauge_from_name(self.gauge)
        if self.p is None:
            raise ValueError(f"suite {self.suite} needs --p or --gauge")
        return power_gauge(self.p)

    def lens(self) -> LensDomain:
        if self.c is not None:
            return LensDomain.from_constant(self.c)
        return LensDomain.from_gauge(self.make_gauge())

    def row(self, v: InequalityVerdict, hard: bool = True) -> Row:
        return row_from_verdict(v, self.k, self.n, self.p_label, hard)


def gauge_from_name(name: str) -> ConvexGauge:
    """'exp', 'quartic' or 'power:<p>'."""
    if name in NAMED_GAUGES:
        return NAMED_GAUGES[name]()
    if name.startswith("power:"):
        return power_gauge(float(name.split(":", 1)[1]))
    raise ValueError(f"unknown gauge {name!r}; use {sorted(NAMED_GAUGES)} or power:<p>")


# ---------------------------------------------------------------------------
# batched L^p suites


def _batch_rule_nodes(n: int) -> int:
    return 2 * n + 8


class _Moments:
    """Lazily computed batch L^p norms of P, LP, (-L)^{1/2}P and grad P."""

    def __init__(self, coeffs: np.ndarray, k: int, n: int, p: float):
        self.coeffs, self.k, self.n, self.p = coeffs, k, n, p
        order, _ = _basis(k, n)
        self.order = order.astype(float)
        self._cache: dict[str, tuple[np.ndarray, np.ndarray, bool]] = {}

    def norm(self, which: str) -> list[NormResult]:
        if which not in self._cache:
            scale = {"P": 1.0, "LP": -self.order, "S": np.sqrt(self.order), "grad": 1.0}[which]
            C = coefficient_tensors(self.coeffs * scale, self.k, self.n)
            self._cache[which] = batch_moments(
                C, self.p, gradient=which == "grad", m=_batch_rule_nodes(self.n)
            )
        vals, errs, exact = self._cache[which]
        out = []
        for v, e in zip(vals, errs):
            value = max(v, 0.0) ** (1 / self.p)
            if exact:
                out.append(NormResult(value, "exact", 0.0))
            else:
                out.append(_inexact(value, "quadrature", value * e / (self.p * v) if v > 0 else 0.0))
        return out


def _scale(r: NormResult, f: float) -> NormResult:
    if r.mode == "exact":
        return NormResult(r.value * f, "exact", 0.0)
    return _inexact(r.value * f, r.mode, r.error_estimate * f)


def _batch_verdicts(cell: Cell, M: _Moments) -> list[list[InequalityVerdict]]:
    n, p = max(cell.n, 1), cell.p
    suite = cell.suite
    if suite == "mth03":
        lhs, rhs = M.norm("LP"), M.norm("P")
        f = CONSTANT_MTH03 * n ** generator_exponent(p)
        return [[make_verdict("mth03", a, _scale(b, f))] for a, b in zip(lhs, rhs)]
    if suite == "mth02":
        lhs, rhs = M.norm("grad"), M.norm("P")
        f = n ** grad_exponent(p)
        return [[make_verdict("mth02", a, _scale(b, f), ceiling=cell.ceiling)] for a, b in zip(lhs, rhs)]
    if suite == "freud_1d":
        lhs, rhs = M.norm("grad"), M.norm("P")
        f = math.sqrt(n / p)
        return [[make_verdict("freud_1d", a, _scale(b, f), ceiling=cell.ceiling)] for a, b in zip(lhs, rhs)]
    if suite == "rot2":
        g, P, L = M.norm("grad"), M.norm("P"), M.norm("LP")
        mom = gaussian_abs_moment(p)
        complex_ = [cell.k >= 2 and not real_up_to_phase(c) for c in M.coeffs]
        return [
            [
                make_verdict(
                    "rot2_ph1", _scale(a, mom), _scale(b, cell.n), label="complex" if z else ""
                ),
                make_verdict("rot2_ph2", c, _scale(b, cell.n**2)),
            ]
            for a, b, c, z in zip(g, P, L, complex_)
        ]
    if suite == "lustp":
        S, P, L = M.norm("S"), M.norm("P"), M.norm("LP")
        out = []
        for s, a, b in zip(S, P, L):
            value = CONSTANT_LUSTP * math.sqrt(a.value * b.value)
            if a.mode == b.mode == "exact":
                rhs = NormResult(value, "exact", 0.0)
            else:
                rel = 0.5 * (a.error_estimate / a.value + b.error_estimate / b.value)
                rhs = _inexact(value, "quadrature", rel * value)
            out.append([make_verdict("lustp", s, rhs)])
        return out
    if suite == "riesz":
        g, S = M.norm("grad"), M.norm("S")
        return [
            [make_verdict("riesz", a, b, ceiling=math.inf, label="probe")] for a, b in zip(g, S)
        ]
    raise UnknownSuiteError(suite)


def _single_verdicts(cell: Cell, P: GaussPoly) -> list[InequalityVerdict]:
    p = cell.p
    suite = cell.suite
    if suite == "mth03":
        return [verify_mth03(P, p)]
    if suite == "mth02":
        return [verify_mth02(P, p, cell.ceiling)]
    if suite == "freud_1d":
        return [verify_freud_1d(P, p, cell.ceiling)]
    if suite == "rot2":
        return list(verify_rot2(P, p))
    if suite == "lustp":
        return [verify_lustp(P, p)]
    if suite == "riesz":
        r = riesz_ratio_probe(P, p)
        return [make_verdict("riesz", r, 1.0, ceiling=math.inf, label="probe")]
    raise UnknownSuiteError(suite)


def _lp_runner(cell: Cell, trials: range) -> list[Row]:
    if cell.p is None:
        raise ValueError(f"suite {cell.suite} needs --p")
    if cell.suite == "freud_1d" and cell.k != 1:
        raise ValueError("freud_1d runs on k = 1 only")
    if cell.suite in ("lustp", "riesz") and cell.n < 1:
        raise ValueError(f"suite {cell.suite} needs n >= 1")
    coeffs = np.array(
        [random_coefficients(cell.rng(i), cell.k, cell.n, _ensemble(cell.ensemble, i)) for i in trials]
    )
    verdicts = _batch_verdicts(cell, _Moments(coeffs, cell.k, cell.n, cell.p))
    hard = cell.suite in ("mth03", "rot2", "lustp")
    rows = []
    for i, vs in zip(trials, verdicts):
        if not all(v.conclusive for v in vs):
            vs = _single_verdicts(cell, cell.poly(i))
        rows.extend(cell.row(v, hard) for v in vs)
    return rows


# ---------------------------------------------------------------------------
# per-trial suites


def _z_in_lens(rng: np.random.Generator, lens: LensDomain) -> complex:
    while True:
        z = complex(*rng.uniform(-1, 1, 2))
        if in_lens(z, lens):
            return z


def _z_outside_lens(rng: np.random.Generator, lens: LensDomain, margin: float = 1e-3) -> complex:
    while True:
        z = complex(*rng.uniform(-1.5, 1.5, 2))
        if abs(z) <= 1.5 and float(lens_margin(z, lens)) < -margin:
            return z


def _restricted_runner(cell: Cell, trials: range) -> list[Row]:
    return [
        cell.row(restricted_range_check(cell.poly(i), cell.radius_kind, seed=cell.seed + i))
        for i in trials
    ]


def _freud_runner(cell: Cell, trials: range) -> list[Row]:
    return [
        cell.row(verify_freud_infty(cell.poly(i), seed=cell.seed + i), hard=False) for i in trials
    ]


def _mth04_runner(cell: Cell, trials: range) -> list[Row]:
    gauge = cell.make_gauge()
    return [cell.row(verify_mth04(cell.poly(i), gauge)) for i in trials]


def _hyp3_runner(cell: Cell, trials: range) -> list[Row]:
    gauge = cell.make_gauge()
    lens = LensDomain.from_gauge(gauge)
    rows = []
    for i in trials:
        rng = cell.rng(i)
        P = cell.poly(i, rng)
        z = _z_in_lens(rng, lens)
        res = hyp3_check(P, gauge, z, lens)
        ratio = res.lhs / res.rhs if res.rhs else 0.0
        rows.append(Row("hyp3", cell.k, cell.n, cell.p_label, res.lhs, res.rhs, ratio, res.ok, res.conclusive))
    return rows


def _flow_runner(cell: Cell, trials: range) -> list[Row]:
    gauge = cell.make_gauge()
    lens = LensDomain.from_gauge(gauge)
    rows = []
    for i in trials:
        rng = cell.rng(i)
        P = cell.poly(i, rng)
        z = _z_in_lens(rng, lens)
        tr = monotonicity_scan(P, gauge, z)
        floor = 1e-8 * tr.scale
        rows.append(
            Row("flow", cell.k, cell.n, cell.p_label, -tr.min_increment, floor,
                -tr.min_increment / floor if floor else 0.0, tr.monotone)
        )
    return rows


def _necessity_runner(cell: Cell, trials: range) -> list[Row]:
    gauge = cell.make_gauge()
    lens = LensDomain.from_gauge(gauge)
    rows = []
    for i in trials:
        z = _z_outside_lens(cell.rng(i), lens)
        w = necessity_witness(gauge, z)
        ratio = w.lhs / w.rhs if w.rhs else math.inf
        rows.append(Row("necessity", 1, 1, cell.p_label, w.lhs, w.rhs, ratio, w.ok, hard=True))
    return rows


def _lens_runner(cell: Cell, trials: range) -> list[Row]:
    """in_lens against the infinitesimal condition at uniform points of the unit disk."""
    gauge = cell.make_gauge()
    lens = LensDomain.from_gauge(gauge)
    rows = []
    for i in trials:
        rng = cell.rng(i)
        r, t = math.sqrt(rng.random()), 2 * math.pi * rng.random()
        z = r * complex(math.cos(t), math.sin(t))
        margin = float(lens_margin(z, lens))
        res = inf1_check(gauge, z)
        agree = in_lens(z, lens) == res.ok or abs(margin) < LENS_BAND
        rows.append(Row("lens_psd", 0, 0, cell.p_label, margin, res.min_value, math.nan, agree))
    return rows


def _gabor1_runner(cell: Cell, trials: range) -> list[Row]:
    lens = cell.lens()
    n = cell.n
    C = np.empty((len(trials), n + 1), dtype=complex)
    for j, i in enumerate(trials):
        rng = cell.rng(i)
        C[j] = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    lhs, rhs = markov_batch(C, lens)
    return [
        Row("gabor1", 1, n, cell.p_label, a, b, a / b, bool(a <= b * (1 + 1e-9)))
        for a, b in zip(lhs, rhs)
    ]


TECHNICAL_GRID = (40, 25)


def technical_cell(trial: int) -> tuple[float, float]:
    """(gamma, delta) of grid cell ``trial`` on [1, 2] x (0, 1/10)."""
    ng, nd = TECHNICAL_GRID
    gi, di = divmod(trial % (ng * nd), nd)
    return 1.0 + gi / (ng - 1), 0.1 * (di + 1) / (nd + 1)


def _technical_runner(cell: Cell, trials: range) -> list[Row]:
    rows = []
    for i in trials:
        g, d = technical_cell(i)
        tb = technical_bound(g, d)
        rows.append(Row("technical", 0, 0, f"gamma={g:.6g};delta={d:.6g}", tb.observed, tb.bound,
                        tb.observed / tb.bound, tb.ok))
    return rows


@lru_cache(maxsize=16)
def _cached_measure(n: int, c: float):
    return moment_measure(n, LensDomain.from_constant(c))


def _moment_runner(cell: Cell, trials: range) -> list[Row]:
    lens = cell.lens()
    n = cell.n
    mu = _cached_measure(n, lens.c_B)
    bound = MARKOV_CONSTANT * n**lens.alpha
    rows = []
    for i in trials:
        if i == 0:
            rows.append(Row("moment_tv", 1, n, cell.p_label, mu.tv_exact, bound, mu.tv_exact / bound,
                            mu.tv_exact <= bound))
        rng = cell.rng(i)
        c = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
        c /= np.linalg.norm(c)
        target = complex(np.arange(n + 1) @ c)
        err = abs(mu.apply(c) - target)
        rows.append(Row("moment_apply", 1, n, cell.p_label, err, MOMENT_TOL, err / MOMENT_TOL,
                        err <= MOMENT_TOL))
    return rows


def _zygmund_runner(cell: Cell, trials: range) -> list[Row]:
    if cell.p is None:
        raise ValueError("zygmund needs --p")
    rows = []
    for i in trials:
        rng = cell.rng(i)
        f = TrigPoly(rng.standard_normal(cell.n + 1), rng.standard_normal(cell.n))
        rows.append(row_from_verdict(zygmund_trig_check(f, cell.p), 1, cell.n, cell.p_label))
    return rows


Runner = Callable[[Cell, range], list[Row]]

SUITES: dict[str, Runner] = {
    "mth03": _lp_runner,
    "mth02": _lp_runner,
    "lustp": _lp_runner,
    "rot2": _lp_runner,
    "riesz": _lp_runner,
    "freud_1d": _lp_runner,
    "mth04": _mth04_runner,
    "freud": _freud_runner,
    "restricted": _restricted_runner,
    "hyp3": _hyp3_runner,
    "flow": _flow_runner,
    "necessity": _necessity_runner,
    "lens": _lens_runner,
    "gabor1": _gabor1_runner,
    "technical": _technical_runner,
    "moment": _moment_runner,
    "zygmund": _zygmund_runner,
}


# ---------------------------------------------------------------------------
# orchestration


def worker_count(requested: int | None = None) -> int:
    """min(requested or cpu count, GBL_THREADS)."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("GBL_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_chunk(args: tuple[Cell, int, int]) -> list[Row]:
    cell, lo, hi = args
    return SUITES[cell.suite](cell, range(lo, hi))


def run_cells(cells: list[Cell], trials: int, workers: int | None = None) -> list[Row]:
    """Run ``trials`` trials of every cell; rows come back in (cell, trial) order."""
    for cell in cells:
        if cell.suite not in SUITES:
            raise UnknownSuiteError(cell.suite)
    jobs = [(c, lo, min(lo + CHUNK, trials)) for c in cells for lo in range(0, trials, CHUNK)]
    workers = worker_count(workers)
    if workers == 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return [r for part in parts for r in part]


def run_suite(suite: str, cells: list[Cell], trials: int, workers: int | None = None) -> SuiteReport:
    if suite not in SUITES:
        raise UnknownSuiteError(suite)
    start = time.perf_counter()
    rows = run_cells(cells, trials, workers)
    return SuiteReport(suite, rows, time.perf_counter() - start)
