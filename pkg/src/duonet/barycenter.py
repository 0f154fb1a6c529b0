"""Entropy-regularized Wasserstein barycenters as a stochastic dual problem.

Node ``i`` holds a histogram ``q_i`` and the primal term
``f_i(p) = W_{mu, q_i}(p)``, the entropic transport cost from ``p`` to ``q_i``.
Its conjugate has a closed form,

    W*(u) = mu * sum_j q_j log( (1/q_j) sum_i exp((u_i - C_ij) / mu) ),

and the gradient is a ``q``-mixture of column softmaxes. Picking one column
``j ~ q`` gives an unbiased single-sample gradient, which is the stochastic
oracle fed to the accelerated dual method.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .diagnostics import solve_quadratic_dual
from .errors import NonSquareCost, NotASimplex
from .graph import NetworkGraph
from .oracles import ConjugateOracle

_SIMPLEX_TOL = 1e-12
# rows are renormalised when their sum falls in this band, rejected otherwise
_CSV_SUM_BAND = (0.999, 1.001)
SIMPLEX_SIGMA_X_SQ = 4.0


def _check_simplex(q, name="q", tol=_SIMPLEX_TOL):
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or np.any(q < 0) or abs(q.sum() - 1.0) > tol:
        raise NotASimplex(f"{name} must be a nonnegative vector summing to 1 (sum={q.sum()!r})")
    return q


def _check_cost(C, n=None):
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NonSquareCost(f"cost matrix must be square, got shape {C.shape}")
    if n is not None and C.shape[0] != n:
        raise NonSquareCost(f"cost matrix is {C.shape[0]}x{C.shape[0]}, histograms have {n} bins")
    if np.any(C < 0) or not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite and nonnegative")
    return C


class EntropicOTOracle(ConjugateOracle):
    """Conjugate oracle of ``p -> W_{mu_reg, q}(p)``.

    Parameters
    ----------
    C : (n, n) array
        Transport cost, ``C[i, j]`` from bin ``i`` of ``p`` to bin ``j`` of ``q``.
    q : (n,) array
        Reference histogram on the simplex.
    mu_reg : float
        Entropic regularisation; also the strong-convexity modulus used for
        ``L_psi``.
    sigma_x_sq : float
        Variance proxy reported for the column sampler. Two simplex points
        are at most ``sqrt(2)`` apart, so the default 4 is a safe bound.
    """

    kind = "ot_entropic"

    def __init__(self, C, q, mu_reg: float, sigma_x_sq: float = SIMPLEX_SIGMA_X_SQ):
        if mu_reg <= 0:
            raise ValueError(f"mu_reg must be positive, got {mu_reg}")
        self.C = _check_cost(C)
        self.q = _check_simplex(q)
        if self.q.shape[0] != self.C.shape[0]:
            raise NonSquareCost(f"q has {self.q.shape[0]} bins, C is {self.C.shape}")
        self.dim = self.q.shape[0]
        self.mu = float(mu_reg)
        self.sigma_x_sq = float(sigma_x_sq)
        self._support = self.q > 0
        cdf = np.cumsum(self.q)
        self._cdf = cdf / cdf[-1]
        self._last = int(np.flatnonzero(self._support)[-1])

    def column_softmax(self, u):
        return kernels.column_softmax(self.C, np.asarray(u, dtype=np.float64), self.mu)

    def value(self, u):
        _, lse = self.column_softmax(u)
        s = self._support
        return float(self.mu * np.sum(self.q[s] * (lse[s] - np.log(self.q[s]))))

    def primal_argmax(self, u):
        P, _ = self.column_softmax(u)
        return P @ self.q

    @property
    def supports_sampling(self):
        return True

    def sample_columns(self, rng, size):
        """Draw ``size`` column indices from ``q`` (inverse CDF on uniforms)."""
        u = rng.random(size)
        idx = np.searchsorted(self._cdf, u, side="right")
        return np.minimum(idx, self._last)

    def sample_primal(self, u, rng, size):
        P, _ = self.column_softmax(u)
        return P[:, self.sample_columns(rng, size)].T

    def batch_mean(self, u, rng, size):
        # same draws as sample_primal, aggregated as a histogram of columns
        P, _ = self.column_softmax(u)
        counts = kernels.categorical_counts(self._cdf, rng.random(size), self._last)
        return P @ (counts / size)

    def primal_value(self, p):
        """``W_{mu, q}(p)``; ``inf`` off the simplex."""
        return self.biconjugate(p)[0]

    def biconjugate(self, p, tol=1e-12, max_iter=500):
        """Solve ``max_u <u, p> - W*(u)``; returns ``(value, u_star)``.

        ``u_star`` is a gradient of ``W_{mu,q}`` at ``p`` (defined up to an
        additive constant; the last coordinate is pinned to 0). Damped Newton.
        """
        p = np.asarray(p, dtype=np.float64)
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            return float("inf"), None
        p = np.clip(p, 0.0, None)
        n = self.dim
        u = np.zeros(n)
        obj = p @ u - self.value(u)
        for _ in range(max_iter):
            P, _ = self.column_softmax(u)
            g = (p - P @ self.q)[:-1]
            if np.max(np.abs(g), initial=0.0) < tol:
                break
            # Hessian of W*: (1/mu) sum_j q_j (diag(P_j) - P_j P_j^T)
            Pq = P * self.q
            H = (np.diag(Pq.sum(axis=1)) - Pq @ P.T)[:-1, :-1] / self.mu
            step = np.linalg.lstsq(H, g, rcond=None)[0]
            if not np.all(np.isfinite(step)) or step @ g <= 0:
                # saturated softmax: the Hessian carries no information
                step = g
            # softmax saturates on the scale mu; longer steps leave the region
            # where the local model means anything
            big = np.max(np.abs(step))
            if big > 5.0 * self.mu:
                step = step * (5.0 * self.mu / big)
            cand, c_obj = self._ascent(u, obj, p, step)
            if c_obj <= obj:
                cand, c_obj = self._ascent(u, obj, p, g * min(self.mu, 5.0 * self.mu / np.max(np.abs(g))))
                if c_obj <= obj:
                    break
            u, obj = cand, c_obj
        return float(obj), u

    def _ascent(self, u, obj, p, step):
        t = 1.0
        while True:
            cand = u.copy()
            cand[:-1] += t * step
            c_obj = p @ cand - self.value(cand)
            if c_obj > obj or t < 1e-6:
                return cand, c_obj
            t *= 0.5


def ot_conjugate_grad(o: EntropicOTOracle, u) -> np.ndarray:
    """Exact gradient of ``W*_{q,mu}`` at ``u`` (a point of the simplex)."""
    return o.primal_argmax(u)


def ot_conjugate_grad_sampled(o: EntropicOTOracle, u, rng) -> np.ndarray:
    """One-column unbiased estimate of :func:`ot_conjugate_grad`."""
    return o.sample_primal(u, rng, 1)[0]


@dataclass
class BarycenterProblem:
    oracles: list
    graph: NetworkGraph
    M_F_sq: float
    sigma_x_sq: float
    sigma_psi_sq: float
    L_psi: float
    mu_reg: float


def build_barycenter_problem(histograms, C, mu_reg: float, graph: NetworkGraph,
                             sigma_x_sq: float | None = None,
                             paper_constants: bool = False) -> BarycenterProblem:
    """Assemble per-node oracles and the constants the stochastic solver needs.

    ``M_F^2 = 2 n m ||C||_inf^2`` with ``||C||_inf`` the largest entry. The
    sampler variance defaults to the simplex bound (4); with
    ``paper_constants=True`` it is 1, so that ``sigma_psi^2 = lambda_max``,
    unless ``sigma_x_sq`` is given explicitly. With ``sigma_x_sq=None`` and
    ``paper_constants=True`` the result is ``sigma_psi^2 = m * lambda_max``.
    """
    Q = np.atleast_2d(np.asarray(histograms, dtype=np.float64))
    m, n = Q.shape
    if m != graph.m:
        raise ValueError(f"{m} histograms for a graph with {graph.m} nodes")
    C = _check_cost(C, n)
    for i in range(m):
        _check_simplex(Q[i], name=f"histogram {i}")

    if paper_constants:
        sx = 1.0 if sigma_x_sq is None else float(sigma_x_sq)
        sigma_psi_sq = m * graph.lambda_max * sx
    else:
        sx = SIMPLEX_SIGMA_X_SQ if sigma_x_sq is None else float(sigma_x_sq)
        sigma_psi_sq = graph.lambda_max * sx

    oracles = [EntropicOTOracle(C, Q[i], mu_reg, sx) for i in range(m)]
    M_F_sq = 2.0 * n * m * float(np.max(np.abs(C))) ** 2
    return BarycenterProblem(oracles, graph, M_F_sq, sx, sigma_psi_sq,
                             graph.lambda_max / mu_reg, float(mu_reg))


def barycenter_objective(oracles, P) -> float:
    """sum_i W_{mu, q_i}(p_i) evaluated at per-node estimates ``P``."""
    return float(sum(o.primal_value(P[i]) for i, o in enumerate(oracles)))


def reference_barycenter(oracles, iters=5000, tol=1e-13):
    """Centralised barycenter for small ``n``, as ground truth for tests.

    Exponentiated-gradient descent on ``sum_i W_{mu, q_i}(p)`` with
    backtracking; the gradient of each term is the biconjugate maximiser.
    Iterates stay in the interior of the simplex, where every term is
    differentiable. Returns ``(p_star, objective)``.
    """
    m, n = len(oracles), oracles[0].dim

    def f_and_grad(p):
        val, g = 0.0, np.zeros(n)
        for o in oracles:
            v, u = o.biconjugate(p)
            val += v
            g += u
        return val, g

    p = np.full(n, 1.0 / n)
    obj, g = f_and_grad(p)
    step = oracles[0].mu / m
    for _ in range(iters):
        while True:
            w = np.log(p) - step * (g - g.mean())
            cand = np.exp(w - w.max())
            cand /= cand.sum()
            c_obj, c_g = f_and_grad(cand)
            if c_obj <= obj or step < 1e-14:
                break
            step *= 0.5
        done = obj - c_obj < tol
        if c_obj <= obj:
            p, obj, g = cand, c_obj, c_g
        if done:
            break
        step *= 1.5
    return p, obj


def barycenter_dual_solution(oracles, graph: NetworkGraph, p_star):
    """Dual solution ``y*`` and its norm ``R_y`` at a consensus barycenter ``p_star``.

    Each ``grad W_{mu,q_i}(p*)`` is only fixed up to adding a constant vector;
    the constants are chosen so the gradients sum to zero, which is the
    optimality condition the barred dual solution must satisfy.
    """
    U = np.stack([o.biconjugate(p_star)[1] for o in oracles])
    U = U - U.mean(axis=1, keepdims=True)
    U = U - U.mean(axis=0, keepdims=True)
    y_star, _ = solve_quadratic_dual(graph.sqrt_laplacian(), U)
    return y_star, float(np.linalg.norm(y_star))


def read_histograms_csv(path) -> np.ndarray:
    """One histogram per row. Rows summing to within 1e-3 of 1 are renormalised."""
    rows = []
    with open(Path(path), newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            vals = np.array([float(c) for c in row])
            s = vals.sum()
            if np.any(vals < 0) or not (_CSV_SUM_BAND[0] <= s <= _CSV_SUM_BAND[1]):
                raise NotASimplex(f"{path}:{lineno}: row sums to {s:.6g} or has negative entries")
            rows.append(vals / s)
    if not rows:
        raise ValueError(f"{path}: no histograms")
    widths = {r.size for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing lengths {sorted(widths)}")
    return np.vstack(rows)


def read_cost_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        C = np.array([[float(c) for c in row] for row in csv.reader(fh) if row])
    return _check_cost(C)
