"""Multi-start projected gradient ascent for Bernstein-Markov ratios.

Polynomials are parametrised by real coefficients in orthonormal coordinates
b_alpha = c_alpha sqrt(alpha!), so the Parseval norm is the Euclidean norm
of b and the search runs on the unit sphere. The objective is

    J(b) = (1/p) (log N_num(b) - log N_den(b)),

where N_den = int |P|^p and N_num = int |grad P|^p (or int |LP|^p), both
computed with a fixed tensor Gauss-Hermite rule (exact for even p).
All restarts are advanced together as columns of one matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .hermite import GaussPoly, hermite_table, multi_factorial, multi_indices
from .integration import _derivative_table, _gh, exact_node_count
from .lens import generator_exponent, grad_exponent

GRAD_TOL = 1e-7
MAX_ITER = 500
DEFAULT_RESTARTS = 32
OBJECTIVES = ("gradient", "generator")


@dataclass(frozen=True)
class ExtremalReport:
    p: float
    k: int
    n: int
    objective: str
    best_ratio: float
    normalized: float
    argmax: GaussPoly
    restarts: int
    iterations: int
    converged: bool
    probe_max: float

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "n": self.n,
            "objective": self.objective,
            "best_ratio": self.best_ratio,
            "normalized": self.normalized,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "converged": self.converged,
            "argmax": self.argmax.to_dict(),
        }


class _RatioModel:
    """Design matrices of the basis, its derivatives and L on a tensor rule."""

    def __init__(self, k: int, n: int, p: float, objective: str, nodes: int | None = None):
        if objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        self.k, self.n, self.p, self.objective = k, n, p, objective
        self.alphas = multi_indices(k, n)
        A = np.array(self.alphas)
        scale = 1.0 / np.sqrt([float(multi_factorial(a)) for a in self.alphas])
        m = nodes or (exact_node_count(p, n) if float(p / 2).is_integer() else 4 * n + 12)
        x, w = _gh(m)
        H = hermite_table(x, n)
        D = _derivative_table(x, n)
        grids = np.meshgrid(*([np.arange(m)] * k), indexing="ij")
        idx = [g.ravel() for g in grids]
        wt = np.ones(m**k)
        for j in range(k):
            wt = wt * w[idx[j]]
        self.weights = wt
        basis = np.ones((m**k, len(self.alphas)))
        for j in range(k):
            basis *= H[A[:, j]][:, idx[j]].T
        self.phi = basis * scale
        if objective == "gradient":
            mats = []
            for j in range(k):
                Bj = np.ones_like(basis)
                for i in range(k):
                    T = D if i == j else H
                    Bj *= T[A[:, i]][:, idx[i]].T
                mats.append(Bj * scale)
            self.num = mats
        else:
            self.num = [self.phi * (-A.sum(axis=1))]

    def _moment(self, mats: list[np.ndarray], b: np.ndarray):
        """int (sum_j (M_j b)^2)^{p/2} and its gradient in b, for columns of b."""
        vals = [M @ b for M in mats]
        S = sum(v * v for v in vals)
        half = self.p / 2
        Sp = np.power(np.maximum(S, 1e-300), half - 1)
        N = self.weights @ (Sp * S)
        grad = sum(M.T @ (self.weights[:, None] * Sp * v) for M, v in zip(mats, vals)) * self.p
        return N, grad

    def objective_and_grad(self, b: np.ndarray):
        Nn, gn = self._moment(self.num, b)
        Nd, gd = self._moment([self.phi], b)
        J = (np.log(Nn) - np.log(Nd)) / self.p
        G = (gn / Nn - gd / Nd) / self.p
        return J, G

    def ratio(self, b: np.ndarray) -> np.ndarray:
        return np.exp(self.objective_and_grad(b)[0])

    def to_poly(self, b: np.ndarray) -> GaussPoly:
        scale = 1.0 / np.sqrt([float(multi_factorial(a)) for a in self.alphas])
        return GaussPoly.from_dense(self.k, self.alphas, b * scale)


def _tangent(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Component of G tangent to the unit sphere at each column of b."""
    return G - b * np.sum(G * b, axis=0)


class _ProbeTracker:
    """Best objective value seen over every evaluated coefficient vector."""

    def __init__(self):
        self.best = -math.inf
        self.argmax = None

    def update(self, J: np.ndarray, b: np.ndarray) -> None:
        i = int(np.argmax(J))
        if J[i] > self.best:
            self.best = float(J[i])
            self.argmax = b[:, i].copy()


def _polish(model: _RatioModel, b0: np.ndarray, tracker: _ProbeTracker) -> None:
    def f(b):
        J, G = model.objective_and_grad(b[:, None])
        tracker.update(J, b[:, None])
        return -J[0], -G[:, 0]

    minimize(f, b0, jac=True, method="BFGS", options={"gtol": GRAD_TOL / 10, "maxiter": 200})


def extremal_search(
    k: int,
    n: int,
    p: float,
    restarts: int = DEFAULT_RESTARTS,
    objective: str = "gradient",
    seed: int = 0,
    max_iter: int = MAX_ITER,
) -> ExtremalReport:
    """Maximise the gradient (or generator) ratio over real polynomials of degree <= n."""
    if p <= 1:
        raise ValueError("extremal search needs p > 1")
    if not (1 <= k <= 3 and 1 <= n <= 8):
        raise ValueError("extremal search supports k <= 3 and n <= 8")
    model = _RatioModel(k, n, p, objective)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((len(model.alphas), restarts))
    b /= np.linalg.norm(b, axis=0)
    step = np.ones(restarts)
    J, G = model.objective_and_grad(b)
    tracker = _ProbeTracker()
    tracker.update(J, b)
    it = 0
    for it in range(1, max_iter + 1):
        T = _tangent(G, b)
        active = np.linalg.norm(T, axis=0) > GRAD_TOL
        if not active.any():
            break
        while True:
            trial = b + step * T
            trial /= np.linalg.norm(trial, axis=0)
            Jt, Gt = model.objective_and_grad(trial)
            tracker.update(Jt, trial)
            better = (Jt >= J) | ~active
            if better.all() or step.min() < 1e-12:
                break
            step = np.where(better, step, step / 2)
        moved = better & active
        b = np.where(moved, trial, b)
        J = np.where(moved, Jt, J)
        G = np.where(moved, Gt, G)
        step = np.where(moved, np.minimum(step * 2, 1e3), step)
    # gradient ascent is slow along flat ridges; finish each start with BFGS
    for j in range(restarts):
        _polish(model, b[:, j], tracker)
    b_best = tracker.argmax / np.linalg.norm(tracker.argmax)
    J_best, G_best = model.objective_and_grad(b_best[:, None])
    converged = bool(np.linalg.norm(_tangent(G_best, b_best[:, None])) <= GRAD_TOL)
    ratio = float(math.exp(max(tracker.best, float(J_best[0]))))
    expo = grad_exponent(p) if objective == "gradient" else generator_exponent(p)
    return ExtremalReport(
        p=p,
        k=k,
        n=n,
        objective=objective,
        best_ratio=ratio,
        normalized=ratio / n**expo,
        argmax=model.to_poly(b_best),
        restarts=restarts,
        iterations=it,
        converged=converged,
        probe_max=float(math.exp(tracker.best)),
    )


def random_probe_max(
    k: int, n: int, p: float, probes: int = 10**5, objective: str = "gradient", seed: int = 0
) -> float:
    """Largest ratio over random unit coefficient vectors, as a floor for the search."""
    model = _RatioModel(k, n, p, objective)
    rng = np.random.default_rng(seed)
    best = 0.0
    for lo in range(0, probes, 4096):
        b = rng.standard_normal((len(model.alphas), min(4096, probes - lo)))
        b /= np.linalg.norm(b, axis=0)
        best = max(best, float(model.ratio(b).max()))
    return best
