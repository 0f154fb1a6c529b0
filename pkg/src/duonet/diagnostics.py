"""Verification quantities: gaps, residuals, lemma checkers, trace I/O."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TooFewSamples
from .graph import SqrtLaplacian, apply_sqrtW
from .oracles import conjugate_sum, dual_value, primal_objective


@dataclass
class TraceRecord:
    """One iteration of a solver run.

    ``gap`` is the solver's gap surrogate (see the solver docs); ``radius``
    is ``||zeta^k - y*||`` and is ``None`` when no dual solution is known.
    """

    k: int
    gap: float
    consensus_residual: float
    radius: float | None
    r_k: int
    cum_oracle_calls: int
    cum_comm_rounds: int
    alpha_k: float
    A_k: float

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), allow_nan=True)


TRACE_FIELDS = tuple(f.name for f in dataclasses.fields(TraceRecord))


def write_trace(records, path_or_file) -> None:
    """Write records as NDJSON, one object per line, fields in fixed order."""
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            write_trace(records, fh)
        return
    for rec in records:
        path_or_file.write(rec.to_json())
        path_or_file.write("\n")


def trace_to_ndjson(records) -> str:
    buf = io.StringIO()
    write_trace(records, buf)
    return buf.getvalue()


def read_trace(path_or_file) -> list[TraceRecord]:
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, encoding="utf-8") as fh:
            return read_trace(fh)
    out = []
    for line in path_or_file:
        line = line.strip()
        if line:
            out.append(TraceRecord(**json.loads(line)))
    return out


def consensus_residual(s: SqrtLaplacian, X) -> float:
    """||sqrt(W) x||_2; zero exactly when all blocks agree."""
    return float(np.linalg.norm(apply_sqrtW(s, X)))


def duality_gap(oracles, s: SqrtLaplacian, x, y, barred: bool = False) -> float:
    """F(x) + psi(y).

    With ``barred=True``, ``y`` is taken to be ``sqrt(W) y`` already and the
    dual term is ``sum_i phi_i(y_i)``. For consensus ``x`` the result bounds
    ``F(x) - F*`` from above; for non-consensus ``x`` it can be negative.
    """
    dual = conjugate_sum(oracles, y) if barred else dual_value(oracles, s, y)
    return primal_objective(oracles, x) + dual


def solve_quadratic_dual(s: SqrtLaplacian, grad_blocks):
    """Minimum-norm ``y*`` with ``sqrt(W) y* = grad_blocks``.

    ``grad_blocks[i] = grad f_i(x*)`` is the barred dual solution. Returns
    ``(y_star, residual)`` where ``residual`` is the least-squares misfit (zero
    when the gradients sum to zero, i.e. ``x*`` is optimal).
    """
    G = np.asarray(grad_blocks, dtype=np.float64)
    S = s.matrix()
    y_star, *_ = np.linalg.lstsq(S, G, rcond=None)
    return y_star, float(np.linalg.norm(S @ y_star - G))


def recurrence_constant(A: float, B: float) -> float:
    """Smallest admissible ``C = max(1, B + sqrt(B^2 + 2A))``."""
    return max(1.0, B + math.sqrt(B * B + 2.0 * A))


@dataclass
class RecurrenceCheck:
    holds_premise: bool
    bound_C: float
    holds_conclusion: bool


def recurrence_premise_bounds(A, B, r, N=None):
    """Right-hand sides ``sqrt(2 (A r0^2 + B r0/N sqrt(sum_{k<l} (k+2) r_k^2)))``.

    Entry ``l-1`` is the largest value ``r_l`` may take, ``l = 1..N``.
    """
    r = np.asarray(r, dtype=np.float64)
    N = len(r) - 1 if N is None else N
    r0 = r[0]
    weighted = np.cumsum((np.arange(N) + 2.0) * r[:N] ** 2)
    rhs = A * r0 ** 2 + B * (r0 / N) * np.sqrt(weighted)
    return np.sqrt(2.0 * rhs)


def check_recurrence_lemma(A: float, B: float, r, N: int | None = None,
                           rtol: float = 1e-12) -> RecurrenceCheck:
    """Check ``r_l <= C r_0`` for sequences obeying the radius recurrence.

    The premise is ``r_l^2 / 2 <= A r_0^2 + B (r_0/N) sqrt(sum_{k=0}^{l-1} (k+2) r_k^2)``
    for ``l = 1..N``. Both sides are compared with relative slack ``rtol``.
    """
    r = np.asarray(r, dtype=np.float64)
    if A < 0 or B < 0 or np.any(r < 0):
        raise ValueError("A, B and r must be nonnegative")
    if r[0] <= 0:
        raise ValueError("r_0 must be positive")
    N = len(r) - 1 if N is None else N
    if N < 1 or len(r) < N + 1:
        raise ValueError(f"need r_0..r_N with N >= 1, got {len(r)} values for N={N}")
    C = recurrence_constant(A, B)
    lhs = 0.5 * r[1:N + 1] ** 2
    rhs = 0.5 * recurrence_premise_bounds(A, B, r, N) ** 2
    premise = bool(np.all(lhs <= rhs * (1 + rtol) + 1e-300))
    conclusion = bool(np.all(r[:N + 1] <= C * r[0] * (1 + rtol)))
    return RecurrenceCheck(premise, C, conclusion)


@dataclass
class TailReport:
    gammas: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    slack: float
    passed: bool

    def worst_ratio(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.bound > 0, self.empirical / self.bound, 0.0)
        return float(np.max(ratio))


def empirical_tail_check(samples, sigma_sq: float, slack: float = 1.5,
                         gammas=None, min_samples: int = 1000) -> TailReport:
    """Compare P(||dev|| >= gamma) against ``2 exp(-gamma^2 / (2 sigma^2))``.

    ``samples`` are deviation norms. The default grid spans 0 to 6 sigma.
    Passes when the empirical exceedance stays below ``slack`` times the
    bound everywhere on the grid.
    """
    d = np.sort(np.abs(np.asarray(samples, dtype=np.float64)))
    if d.size < min_samples:
        raise TooFewSamples(f"need at least {min_samples} samples, got {d.size}")
    sigma = math.sqrt(sigma_sq)
    if gammas is None:
        gammas = np.linspace(0.0, 6.0 * sigma, 25)
    gammas = np.asarray(gammas, dtype=np.float64)
    # fraction of samples >= gamma
    emp = 1.0 - np.searchsorted(d, gammas, side="left") / d.size
    if sigma_sq > 0:
        bound = 2.0 * np.exp(-gammas ** 2 / (2.0 * sigma_sq))
    else:
        bound = np.where(gammas > 0, 0.0, 2.0)
    passed = bool(np.all(emp <= slack * bound))
    return TailReport(gammas, emp, bound, slack, passed)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.abs(np.asarray(y, dtype=np.float64))
    keep = (x > 0) & (y > 0)
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def sample_premise_sequence(A: float, B: float, N: int, rng, r0: float = 1.0,
                            overshoot: float = 1.5, max_tries: int = 1000) -> np.ndarray:
    """Random ``r_0..r_N`` satisfying the recurrence premise, by rejection.

    Each ``r_l`` is proposed uniformly on ``[0, overshoot * bound_l]`` and kept
    only if it respects the premise given ``r_0..r_{l-1}``.
    """
    r = np.empty(N + 1)
    r[0] = r0
    acc = 0.0
    for l in range(1, N + 1):
        acc += (l + 1.0) * r[l - 1] ** 2
        bound = math.sqrt(2.0 * (A * r0 ** 2 + B * (r0 / N) * math.sqrt(acc)))
        for _ in range(max_tries):
            cand = rng.uniform(0.0, overshoot * bound)
            if cand <= bound:
                break
        else:
            cand = bound
        r[l] = cand
    return r
