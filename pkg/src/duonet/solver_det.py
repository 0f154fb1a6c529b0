"""Deterministic accelerated dual method over a network.

The iteration runs in the barred variables ``lam_bar = sqrt(W) lam`` (and
likewise ``zeta_bar``, ``y_bar``), so the only network operation is one
application of the Laplacian ``W`` per step, i.e. one round of neighbour
exchange. The primal estimate is the ``alpha``-weighted average of the
per-node maximisers ``x_i(lam_bar_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .diagnostics import TraceRecord, consensus_residual
from .errors import NonFiniteIterate
from .graph import NetworkGraph, apply_W
from .oracles import conjugate_sum, primal_argmax_blocks, primal_objective


@dataclass
class DetState:
    k: int
    alpha_k: float
    A_k: float
    lam_bar: np.ndarray
    zeta_bar: np.ndarray
    y_bar: np.ndarray
    x_sum: np.ndarray
    comm_rounds: int = 0

    @property
    def x_ergodic(self) -> np.ndarray:
        return self.x_sum / self.A_k


@dataclass
class DetResult:
    x_N: np.ndarray
    y_bar_N: np.ndarray
    trace: list = field(repr=False)
    state: DetState = field(repr=False)


def default_L_psi(graph: NetworkGraph, oracles) -> float:
    """``lambda_max(W) / mu`` with ``mu`` the weakest strong-convexity modulus."""
    return graph.lambda_max / min(o.mu for o in oracles)


def predict_iterations_det(M_F: float, mu: float, chi: float, eps: float,
                           c_N: float = 1.0) -> int:
    """``ceil(c_N sqrt(M_F^2 chi / (mu eps)))``."""
    for name, v in (("M_F", M_F), ("mu", mu), ("chi", chi), ("eps", eps), ("c_N", c_N)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    v = c_N * math.sqrt(M_F * M_F * chi / (mu * eps))
    # absorb rounding so that an exact integer does not round up
    return max(1, math.ceil(v * (1.0 - 1e-12)))


def solve_deterministic(graph: NetworkGraph, oracles, N: int, L_psi: float | None = None, *,
                        y_bar_star=None, callback=None) -> DetResult:
    """Run ``N`` steps of the deterministic method.

    Parameters
    ----------
    graph : NetworkGraph
    oracles : list of ConjugateOracle
        One per node; only ``primal_argmax`` and ``value`` are used.
    N : int
        Number of iterations (= communication rounds).
    L_psi : float, optional
        Smoothness of the dual; defaults to ``lambda_max(W) / min mu_i``.
    y_bar_star : array, optional
        Barred dual solution; when given, traces carry ``||zeta_bar - y_bar*||``.
    callback : callable, optional
        Called with the :class:`DetState` after every iteration.

    The trace ``gap`` is ``F(x^k) + sum_i phi_i(y_bar_i^k)``. It tends to zero
    at rate ``1/k^2`` but may be negative, since ``x^k`` is not exactly in
    consensus.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if len(oracles) != graph.m:
        raise ValueError(f"{len(oracles)} oracles for {graph.m} nodes")
    L = default_L_psi(graph, oracles) if L_psi is None else float(L_psi)
    if not L > 0:
        raise ValueError(f"L_psi must be positive, got {L} (pass it explicitly for m = 1)")

    s = graph.sqrt_laplacian()
    n = oracles[0].dim
    zeros = np.zeros((graph.m, n))
    st = DetState(0, 0.0, 0.0, zeros, zeros, zeros, zeros)
    trace = []
    for k in range(N):
        a = (k + 2) / (4.0 * L)
        A_next = st.A_k + a
        lam = kernels.coupled_average(a, st.zeta_bar, st.A_k, st.y_bar, A_next)
        x = primal_argmax_blocks(oracles, lam)
        zeta = st.zeta_bar - a * apply_W(graph, x)
        y = kernels.coupled_average(a, zeta, st.A_k, st.y_bar, A_next)
        st = DetState(k + 1, a, A_next, lam, zeta, y, st.x_sum + a * x, st.comm_rounds + 1)
        if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(st.x_sum))):
            raise NonFiniteIterate(f"non-finite iterate at k={k + 1}; is L_psi={L} too small?")

        x_erg = st.x_ergodic
        with np.errstate(over="ignore", invalid="ignore"):
            gap = primal_objective(oracles, x_erg) + conjugate_sum(oracles, y)
        if not math.isfinite(gap):
            raise NonFiniteIterate(f"non-finite gap at k={k + 1}")
        radius = None if y_bar_star is None else float(np.linalg.norm(zeta - y_bar_star))
        trace.append(TraceRecord(
            k=k + 1, gap=gap, consensus_residual=consensus_residual(s, x_erg), radius=radius,
            r_k=1, cum_oracle_calls=(k + 1) * graph.m, cum_comm_rounds=st.comm_rounds,
            alpha_k=a, A_k=A_next,
        ))
        if callback is not None:
            callback(st)
    return DetResult(st.x_ergodic, st.y_bar, trace, st)
