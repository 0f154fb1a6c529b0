"""Seed sweeps and accuracy sweeps for the stochastic solver."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .solver_stoch import solve_stochastic


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    seed: int
    iterations: int
    objective_gap: float
    consensus_residual: float
    oracle_calls: int
    comm_rounds: int
    success: bool
    max_radius_ratio: float | None


def run_trial(graph, oracles, config: SolverConfig, index: int, F_star: float,
              R_y: float | None = None, y_star=None,
              sigma_psi_sq: float | None = None) -> TrialOutcome:
    """One stochastic solve with ``seed = config.seed + index``.

    Success means ``F(x^N) - F* <= eps`` and, when ``R_y`` is known,
    ``||sqrt(W) x^N|| <= eps / R_y``.
    """
    seed = config.seed + index
    res = solve_stochastic(graph, oracles, config.replace(seed=seed), F_star=F_star,
                           y_star=y_star, sigma_psi_sq=sigma_psi_sq,
                           keep_trace=y_star is not None)
    last = res.trace[-1]
    ok = last.gap <= config.eps
    if R_y is not None and R_y > 0:
        ok = ok and last.consensus_residual <= config.eps / R_y
    ratio = None
    if y_star is not None:
        r0 = float(np.linalg.norm(y_star))
        if r0 > 0:
            ratio = max(rec.radius for rec in res.trace) / r0
    return TrialOutcome(index, seed, res.N, last.gap, last.consensus_residual,
                        res.total_oracle_calls, res.comm_rounds, bool(ok), ratio)


def _run_trial_args(args):
    return run_trial(*args)


def run_trials(graph, oracles, config: SolverConfig, F_star: float, R_y: float | None = None,
               y_star=None, sigma_psi_sq: float | None = None, trials: int | None = None,
               workers: int = 1) -> list[TrialOutcome]:
    """Independent trials, returned sorted by trial index.

    With ``workers > 1`` trials run in separate processes; results are the
    same as a serial run because every sample is keyed by its seed.
    """
    T = config.trials if trials is None else trials
    jobs = [(graph, oracles, config, i, F_star, R_y, y_star, sigma_psi_sq) for i in range(T)]
    if workers > 1 and T > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_trial_args, jobs))
    else:
        out = [_run_trial_args(j) for j in jobs]
    return sorted(out, key=lambda t: t.index)


def success_fraction(outcomes) -> float:
    return float(np.mean([t.success for t in outcomes]))


def eps_sweep(graph, oracles, config: SolverConfig, eps_values, F_star: float | None = None,
              sigma_psi_sq: float | None = None):
    """Total oracle calls at each accuracy; returns ``[(eps, calls, N), ...]``."""
    rows = []
    for eps in eps_values:
        res = solve_stochastic(graph, oracles, config.replace(eps=float(eps)), F_star=F_star,
                               sigma_psi_sq=sigma_psi_sq, keep_trace=False)
        rows.append((float(eps), res.total_oracle_calls, res.N))
    return rows
