"""Stochastic accelerated dual method with growing mini-batches.

Each iteration draws ``r_k`` samples of the primal maximiser at every node
and feeds ``sqrt(W)`` of their average to an accelerated gradient step on
the dual. Batch sizes grow with the step weight ``alpha_k`` so that the
gradient noise shrinks as the method accelerates.

The state is kept in unbarred dual variables ``(lam, zeta, y)`` so that the
trace can report ``||zeta - y*||``. Multiplying the recursion by ``sqrt(W)``
gives an equivalent run in barred variables that needs one Laplacian
exchange per iteration, and that is what ``cum_comm_rounds`` counts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import SolverConfig
from .diagnostics import TraceRecord, consensus_residual
from .errors import BatchOverflow, ConfigError, NonFiniteIterate
from .graph import NetworkGraph, apply_sqrtW
from .oracles import KeyedStream, batched_primal, dual_value, primal_objective
from .solver_det import default_L_psi


def next_alpha(A: float, L: float) -> float:
    """Positive root of ``2 L alpha^2 = A + alpha``."""
    return (1.0 + math.sqrt(1.0 + 8.0 * L * A)) / (4.0 * L)


def batch_size(alpha: float, sigma_psi_sq: float, N: int, delta: float, eps: float,
               c_r: float = 1.0) -> int:
    """``ceil(c_r max(1, sigma_psi^2 alpha ln(N/delta) / eps))``.

    Returns exactly 1 when ``sigma_psi_sq`` is zero.
    """
    if sigma_psi_sq == 0:
        return 1
    v = sigma_psi_sq * alpha * math.log(N / delta) / eps
    return max(1, math.ceil(c_r * max(1.0, v)))


def predict_iterations_stoch(M_F_sq: float, mu: float, chi: float, eps: float,
                             c_N: float = 1.0) -> int:
    """``ceil(c_N sqrt(M_F^2 chi / (mu eps)))``."""
    if not (M_F_sq > 0 and mu > 0 and chi > 0 and eps > 0 and c_N > 0):
        raise ConfigError("M_F_sq, mu, chi, eps and c_N must all be positive")
    v = c_N * math.sqrt(M_F_sq * chi / (mu * eps))
    return max(1, math.ceil(v * (1.0 - 1e-12)))


@dataclass
class StochState:
    k: int
    alpha_k: float
    A_k: float
    lam: np.ndarray
    zeta: np.ndarray
    y: np.ndarray
    x_sum: np.ndarray
    r_k: int = 0
    oracle_calls: int = 0
    comm_rounds: int = 0

    @property
    def x_ergodic(self) -> np.ndarray:
        return self.x_sum / self.A_k


@dataclass
class StochResult:
    x_N: np.ndarray
    y_N: np.ndarray
    N: int
    total_oracle_calls: int
    comm_rounds: int
    trace: list = field(repr=False)
    state: StochState = field(repr=False)
    L_psi: float = 0.0
    sigma_psi_sq: float = 0.0


def resolve_constants(graph: NetworkGraph, oracles, config: SolverConfig):
    """Fill in ``L_psi``, ``sigma_psi^2`` and ``N`` from the config and problem."""
    L = config.L_psi if config.L_psi is not None else default_L_psi(graph, oracles)
    if not L > 0:
        raise ConfigError("L_psi is zero for a single-node graph; set it explicitly")
    if config.sigma_x_sq is not None:
        sx = config.sigma_x_sq
    else:
        sx = max(float(getattr(o, "sigma_x_sq", None) or 0.0) for o in oracles)
    sigma_psi_sq = graph.lambda_max * sx
    if config.N_override is not None:
        N = int(config.N_override)
    else:
        if config.M_F_sq is None:
            raise ConfigError("M_F_sq is required unless N_override is set")
        mu = config.mu if config.mu is not None else min(o.mu for o in oracles)
        N = predict_iterations_stoch(config.M_F_sq, mu, graph.chi, config.eps, config.c_N)
    return L, sigma_psi_sq, N


def solve_stochastic(graph: NetworkGraph, oracles, config: SolverConfig, *,
                     sigma_psi_sq: float | None = None, F_star: float | None = None,
                     y_star=None, callback=None, keep_trace: bool = True) -> StochResult:
    """Run the stochastic method for the horizon implied by ``config``.

    Parameters
    ----------
    graph, oracles
        Network and one sampling oracle per node.
    config : SolverConfig
    sigma_psi_sq : float, optional
        Overrides ``lambda_max * sigma_x^2`` in the batch-size rule.
    F_star : float, optional
        When known, the trace gap is ``F(x^k) - F*``; otherwise it is the
        duality gap ``F(x^k) + psi(y^k)``.
    y_star : array, optional
        Dual solution; when given, traces carry ``||zeta^k - y*||``.
    callback : callable, optional
        Called with the :class:`StochState` after every iteration.

    Raises
    ------
    BatchOverflow
        If a batch would exceed ``config.batch_cap``.
    NonFiniteIterate
        If an iterate overflows.
    """
    L, s_psi, N = resolve_constants(graph, oracles, config)
    if sigma_psi_sq is not None:
        s_psi = float(sigma_psi_sq)
    if math.log(N / config.delta) < 3.0:
        warnings.warn(f"ln(N/delta) = {math.log(N / config.delta):.3g} < 3; the "
                      "high-probability regime is not reached", RuntimeWarning, stacklevel=2)

    s = graph.sqrt_laplacian()
    stream = KeyedStream(config.seed)
    zeros = np.zeros((graph.m, oracles[0].dim))
    st = StochState(0, 0.0, 0.0, zeros, zeros, zeros, zeros)
    trace = []
    for k in range(N):
        a = next_alpha(st.A_k, L)
        A_next = st.A_k + a
        r = batch_size(a, s_psi, N, config.delta, config.eps, config.c_r)
        if r > config.batch_cap:
            raise BatchOverflow(f"batch size {r} at k={k + 1} exceeds cap {config.batch_cap}")
        lam = kernels.coupled_average(a, st.zeta, st.A_k, st.y, A_next)
        x_t = batched_primal(oracles, s, lam, r, stream, iteration=k + 1)
        zeta = st.zeta - a * apply_sqrtW(s, x_t)
        y = kernels.coupled_average(a, zeta, st.A_k, st.y, A_next)
        st = StochState(k + 1, a, A_next, lam, zeta, y, st.x_sum + a * x_t, r,
                        st.oracle_calls + r * graph.m, st.comm_rounds + 1)
        if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(st.x_sum))):
            raise NonFiniteIterate(f"non-finite iterate at k={k + 1}")

        if keep_trace or k == N - 1:
            x_erg = st.x_ergodic
            with np.errstate(over="ignore", invalid="ignore"):
                F = primal_objective(oracles, x_erg)
                gap = F - F_star if F_star is not None else F + dual_value(oracles, s, y)
            if not math.isfinite(gap):
                raise NonFiniteIterate(f"non-finite gap at k={k + 1}")
            radius = None if y_star is None else float(np.linalg.norm(zeta - y_star))
            rec = TraceRecord(k=k + 1, gap=gap, consensus_residual=consensus_residual(s, x_erg),
                              radius=radius, r_k=r, cum_oracle_calls=st.oracle_calls,
                              cum_comm_rounds=st.comm_rounds, alpha_k=a, A_k=A_next)
            if keep_trace:
                trace.append(rec)
            else:
                trace = [rec]
        if callback is not None:
            callback(st)
    return StochResult(st.x_ergodic, st.y, N, st.oracle_calls, st.comm_rounds, trace, st,
                       L, s_psi)
