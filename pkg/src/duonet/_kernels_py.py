"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def laplacian_apply(indptr, indices, X):
    m = X.shape[0]
    deg = np.diff(indptr).astype(np.float64)
    out = deg[:, None] * X
    rows = np.repeat(np.arange(m), np.diff(indptr))
    np.subtract.at(out, rows, X[indices])
    return out


def coupled_average(a, z, A, y, A_next):
    return (a * z + A * y) / A_next


def column_softmax(C, u, mu):
    T = (u[:, None] - C) / mu
    mx = T.max(axis=0)
    E = np.exp(T - mx)
    s = E.sum(axis=0)
    return E / s, mx + np.log(s)


def categorical_counts(cdf, uniforms, last):
    idx = np.searchsorted(cdf, uniforms, side="right")
    np.minimum(idx, last, out=idx)
    return np.bincount(idx, minlength=cdf.shape[0]).astype(np.int64)
