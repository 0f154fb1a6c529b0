"""Per-node conjugate (dual) oracles and batched stochastic estimates.

Each node ``i`` holds a convex ``f_i`` known through its conjugate
``phi_i(y) = max_x <y, x> - f_i(x)``. The oracle returns ``phi_i(y)`` and
the maximiser ``x_i(y) = grad phi_i(y)``. Stochastic oracles also draw
unbiased samples of ``x_i(y)``.

Randomness is keyed, not stateful: the samples node ``i`` draws at
iteration ``k`` come from a Philox stream seeded by ``(seed, k, i)``, and
sample ``s`` is the ``s``-th draw on that stream. Changing the number of
nodes processed in parallel, or their order, does not change any sample.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoStochasticSupport
from .graph import SqrtLaplacian, apply_sqrtW

ORACLE_KINDS = ("quadratic_exact", "quadratic_gaussian", "ot_entropic")


class ConjugateOracle(abc.ABC):
    """Interface for one node's dual oracle.

    Subclasses set ``dim`` (block size ``n``) and ``mu`` (strong-convexity
    modulus of ``f_i``, so ``phi_i`` has a ``1/mu``-Lipschitz gradient).
    """

    dim: int
    mu: float
    kind: str = "abstract"

    @abc.abstractmethod
    def value(self, y: np.ndarray) -> float:
        """phi_i(y)."""

    @abc.abstractmethod
    def primal_argmax(self, y: np.ndarray) -> np.ndarray:
        """x_i(y), the maximiser in the conjugate (= grad phi_i(y))."""

    @abc.abstractmethod
    def primal_value(self, x: np.ndarray) -> float:
        """f_i(x)."""

    @property
    def supports_sampling(self) -> bool:
        return False

    def sample_primal(self, y: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent draws of x_i(y, xi), shape ``(size, dim)``."""
        raise NoStochasticSupport(f"{type(self).__name__} has no sampler")

    def batch_mean(self, y: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.sample_primal(y, rng, size).mean(axis=0)


class QuadraticOracle(ConjugateOracle):
    """``f(x) = mu/2 ||x - b||^2``, optionally with Gaussian sample noise.

    With ``sigma_x_sq`` set, each draw is ``x(y) + noise`` where the noise has
    ``sigma_x_sq / n`` variance per coordinate, so ``E||noise||^2 = sigma_x_sq``.
    """

    def __init__(self, b, mu: float = 1.0, sigma_x_sq: float | None = None):
        if mu <= 0:
            raise ValueError(f"mu must be positive, got {mu}")
        if sigma_x_sq is not None and sigma_x_sq < 0:
            raise ValueError(f"sigma_x_sq must be >= 0, got {sigma_x_sq}")
        self.b = np.atleast_1d(np.asarray(b, dtype=np.float64)).copy()
        self.b.setflags(write=False)
        self.dim = self.b.shape[0]
        self.mu = float(mu)
        self.sigma_x_sq = sigma_x_sq
        self.kind = "quadratic_exact" if sigma_x_sq is None else "quadratic_gaussian"

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        return float(y @ self.b + y @ y / (2.0 * self.mu))

    def primal_argmax(self, y):
        return self.b + np.asarray(y, dtype=np.float64) / self.mu

    def primal_value(self, x):
        d = np.asarray(x, dtype=np.float64) - self.b
        return float(0.5 * self.mu * (d @ d))

    @property
    def supports_sampling(self):
        return self.sigma_x_sq is not None

    def sample_primal(self, y, rng, size):
        if self.sigma_x_sq is None:
            return super().sample_primal(y, rng, size)
        scale = np.sqrt(self.sigma_x_sq / self.dim)
        noise = rng.standard_normal((size, self.dim))
        return self.primal_argmax(y) + scale * noise


@dataclass(frozen=True)
class StochasticDualConfig:
    sigma_x_sq: float
    lambda_max: float

    def __post_init__(self):
        if self.sigma_x_sq < 0:
            raise ValueError("sigma_x_sq must be >= 0")

    @property
    def sigma_psi_sq(self) -> float:
        return self.lambda_max * self.sigma_x_sq


class KeyedStream:
    """Counter-based random source keyed by ``(seed, iteration, node)``."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def generator(self, iteration: int, node: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed & (2**64 - 1), int(iteration), int(node)])
        return np.random.Generator(np.random.Philox(ss))


def _check_blocks(oracles, Y):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != len(oracles):
        raise DimensionMismatch(f"expected ({len(oracles)}, n) blocks, got shape {Y.shape}")
    for o in oracles:
        if o.dim != Y.shape[1]:
            raise DimensionMismatch(f"oracle dim {o.dim} does not match block size {Y.shape[1]}")
    return Y


def primal_argmax_blocks(oracles, Y_bar) -> np.ndarray:
    """Stack ``x_i(Y_bar[i])`` over nodes."""
    Y_bar = _check_blocks(oracles, Y_bar)
    return np.stack([o.primal_argmax(Y_bar[i]) for i, o in enumerate(oracles)])


def primal_objective(oracles, X) -> float:
    """F(x) = sum_i f_i(x_i)."""
    X = _check_blocks(oracles, X)
    return float(sum(o.primal_value(X[i]) for i, o in enumerate(oracles)))


def conjugate_sum(oracles, Y_bar) -> float:
    """phi(y_bar) = sum_i phi_i(y_bar_i), the dual in the barred variables."""
    Y_bar = _check_blocks(oracles, Y_bar)
    return float(sum(o.value(Y_bar[i]) for i, o in enumerate(oracles)))


def dual_value(oracles, s: SqrtLaplacian, Y) -> float:
    """psi(y) = sum_i phi_i([sqrt(W) y]_i)."""
    Y = _check_blocks(oracles, Y)
    return conjugate_sum(oracles, apply_sqrtW(s, Y))


def batched_primal(oracles, s: SqrtLaplacian, lam, r: int, stream: KeyedStream,
                   iteration: int = 0) -> np.ndarray:
    """Average of ``r`` samples of ``x_i([sqrt(W) lam]_i, xi)`` at every node.

    Nodes are reduced in index order, samples in draw order.
    """
    if r < 1:
        raise ValueError(f"batch size must be >= 1, got {r}")
    lam = _check_blocks(oracles, lam)
    for o in oracles:
        if not o.supports_sampling:
            raise NoStochasticSupport(f"{type(o).__name__} ({o.kind}) has no sampler")
    lam_bar = apply_sqrtW(s, lam)
    return np.stack([
        o.batch_mean(lam_bar[i], stream.generator(iteration, i), int(r))
        for i, o in enumerate(oracles)
    ])


def batched_dual_grad(oracles, s: SqrtLaplacian, lam, r: int, stream: KeyedStream,
                      iteration: int = 0) -> np.ndarray:
    """Mini-batch estimate of grad psi(lam): sqrt(W) applied to the batched primal."""
    return apply_sqrtW(s, batched_primal(oracles, s, lam, r, stream, iteration))
