"""Accelerated dual methods for decentralized convex optimization."""

__version__ = "0.1.0"

from .config import SolverConfig
from .graph import NetworkGraph, SqrtLaplacian, apply_W, apply_sqrtW, build_graph
from .oracles import (ConjugateOracle, KeyedStream, QuadraticOracle, batched_dual_grad,
                      batched_primal, dual_value)
from .solver_det import predict_iterations_det, solve_deterministic
from .solver_stoch import (batch_size, next_alpha, predict_iterations_stoch,
                           solve_stochastic)

__all__ = [
    "SolverConfig", "NetworkGraph", "SqrtLaplacian", "apply_W", "apply_sqrtW", "build_graph",
    "ConjugateOracle", "KeyedStream", "QuadraticOracle", "batched_dual_grad", "batched_primal",
    "dual_value", "predict_iterations_det", "solve_deterministic", "batch_size", "next_alpha",
    "predict_iterations_stoch", "solve_stochastic",
]
