"""Network topologies, Laplacians and the square-root operator.

Block vectors are ``(m, n)`` arrays: row ``i`` is node ``i``'s block. The
lifted Laplacian ``W = Wbar (x) I_n`` is never formed; every operator acts
on the node axis and broadcasts over the ``n`` columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DimensionMismatch, DisconnectedGraph, InvalidEdge

TOPOLOGIES = ("path", "cycle", "star", "complete", "erdos_renyi", "edge_list")

_ZERO_CLIP = 1e-12
_ER_RETRIES = 100


@dataclass(frozen=True, eq=False)
class SqrtLaplacian:
    """Eigen-factored square root of a graph Laplacian.

    ``sqrt(Wbar) = V diag(s) V^T``, where ``s`` are the square roots of the
    clipped eigenvalues. This is a dense global operator: a real network
    cannot apply it with one neighbour exchange.
    """

    eigenvectors: np.ndarray
    sqrt_eigenvalues: np.ndarray
    rank: int

    @property
    def m(self) -> int:
        return self.eigenvectors.shape[0]

    def matrix(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.sqrt_eigenvalues) @ V.T

    def pinv_matrix(self) -> np.ndarray:
        """Moore-Penrose pseudo-inverse of ``sqrt(Wbar)``."""
        s = self.sqrt_eigenvalues
        inv = np.divide(1.0, s, out=np.zeros_like(s), where=s > 0)
        V = self.eigenvectors
        return (V * inv) @ V.T


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    m: int
    edges: tuple[tuple[int, int], ...]
    laplacian: np.ndarray
    lambda_max: float
    lambda_min_plus: float
    chi: float
    # CSR neighbour lists, used by apply_W
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    _eig: tuple = field(repr=False, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def sqrt_laplacian(self) -> SqrtLaplacian:
        evals, evecs = self._eig
        rank = int(np.count_nonzero(evals > 0))
        return SqrtLaplacian(evecs, np.sqrt(evals), rank)

    def summary(self) -> dict:
        return {
            "m": self.m,
            "num_edges": self.num_edges,
            "lambda_max": self.lambda_max,
            "lambda_min_plus": self.lambda_min_plus,
            "chi": self.chi,
        }


def from_edges(m: int, edges) -> NetworkGraph:
    """Build a graph from an iterable of ``(i, j)`` pairs.

    Self-loops and duplicate pairs are dropped. Raises :class:`InvalidEdge`
    for out-of-range endpoints and :class:`DisconnectedGraph` when the zero
    eigenvalue of the Laplacian is not simple.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    pairs = set()
    for e in edges:
        i, j = (int(v) for v in e)
        if not (0 <= i < m and 0 <= j < m):
            raise InvalidEdge(f"edge ({i}, {j}) has an endpoint outside [0, {m})")
        if i != j:
            pairs.add((min(i, j), max(i, j)))
    pairs = tuple(sorted(pairs))

    L = np.zeros((m, m))
    adj = [[] for _ in range(m)]
    for i, j in pairs:
        L[i, j] = L[j, i] = -1.0
        adj[i].append(j)
        adj[j].append(i)
    L[np.diag_indices(m)] = [len(a) for a in adj]

    evals, evecs = np.linalg.eigh(L)
    evals = np.where(evals < _ZERO_CLIP, 0.0, evals)
    n_zero = int(np.count_nonzero(evals == 0.0))
    if n_zero > 1:
        raise DisconnectedGraph(f"graph has {n_zero} connected components")

    lam_max = float(evals[-1])
    if m == 1:
        # no consensus constraint at all
        lam_min_plus, chi = float("nan"), 1.0
    else:
        lam_min_plus = float(evals[evals > 0][0])
        chi = lam_max / lam_min_plus

    indptr = np.zeros(m + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(a) for a in adj])
    indices = np.array([j for a in adj for j in sorted(a)], dtype=np.int64)
    return NetworkGraph(m, pairs, L, lam_max, lam_min_plus, chi, indptr, indices,
                        (evals, evecs))


def build_graph(topology: str, m: int, *, p: float = 0.5, seed: int = 0,
                edges=None) -> NetworkGraph:
    """Generate one of the standard topologies on ``m`` nodes.

    ``erdos_renyi`` redraws up to 100 times until the sample is connected;
    ``edge_list`` takes its pairs from ``edges``.
    """
    if topology == "edge_list":
        if edges is None:
            raise ValueError("edge_list topology needs edges")
        return from_edges(m, edges)
    if m < 2 and topology != "complete":
        raise ValueError(f"{topology} topology needs m >= 2, got {m}")

    if topology == "path":
        return from_edges(m, [(i, i + 1) for i in range(m - 1)])
    if topology == "cycle":
        return from_edges(m, [(i, (i + 1) % m) for i in range(m)])
    if topology == "star":
        return from_edges(m, [(0, i) for i in range(1, m)])
    if topology == "complete":
        return from_edges(m, [(i, j) for i in range(m) for j in range(i + 1, m)])
    if topology == "erdos_renyi":
        if not 0.0 < p <= 1.0:
            raise ValueError(f"edge probability must be in (0, 1], got {p}")
        rng = np.random.default_rng(seed)
        iu = np.triu_indices(m, k=1)
        for _ in range(_ER_RETRIES):
            keep = rng.random(iu[0].shape[0]) < p
            try:
                return from_edges(m, zip(iu[0][keep], iu[1][keep]))
            except DisconnectedGraph:
                continue
        raise DisconnectedGraph(
            f"no connected Erdos-Renyi sample with m={m}, p={p} in {_ER_RETRIES} draws")
    raise ValueError(f"unknown topology {topology!r}; choose from {TOPOLOGIES}")


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse a text file with one whitespace-separated ``i j`` pair per line."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidEdge(f"{path}:{lineno}: expected 'i j', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


def _as_blocks(X, m):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
        flat = True
    elif X.ndim == 2:
        flat = False
    else:
        raise DimensionMismatch(f"block vector must be 1-D or 2-D, got shape {X.shape}")
    if X.shape[0] != m:
        raise DimensionMismatch(f"expected {m} blocks, got {X.shape[0]}")
    return X, flat


def apply_W(g: NetworkGraph, X) -> np.ndarray:
    """Apply the lifted Laplacian as one round of neighbour exchange.

    Node ``i`` reads only its own block and those of its neighbours.
    """
    X, flat = _as_blocks(X, g.m)
    out = kernels.laplacian_apply(g.indptr, g.indices, X)
    return out[:, 0] if flat else out


def apply_sqrtW(s: SqrtLaplacian, X) -> np.ndarray:
    """Apply ``sqrt(W)`` blockwise (global operator, not a neighbour exchange)."""
    X, flat = _as_blocks(X, s.m)
    V = s.eigenvectors
    out = V @ (s.sqrt_eigenvalues[:, None] * (V.T @ X))
    return out[:, 0] if flat else out
