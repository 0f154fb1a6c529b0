# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin in :mod:`duonet._kernels_py` with the
same signature; :mod:`duonet.kernels` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def laplacian_apply(const cnp.int64_t[::1] indptr,
                    const cnp.int64_t[::1] indices,
                    const double[:, ::1] X):
    """out_i = deg(i) X_i - sum_{j in N(i)} X_j, reading only neighbour rows."""
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t i, j, c, start, stop
    cdef double deg
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(m):
        start = indptr[i]
        stop = indptr[i + 1]
        deg = <double>(stop - start)
        for c in range(n):
            o[i, c] = deg * X[i, c]
        for j in range(start, stop):
            for c in range(n):
                o[i, c] -= X[indices[j], c]
    return out


def coupled_average(double a, const double[:, ::1] z, double A,
                    const double[:, ::1] y, double A_next):
    """(a*z + A*y) / A_next, elementwise."""
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    cdef Py_ssize_t i, c
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(m):
        for c in range(n):
            o[i, c] = (a * z[i, c] + A * y[i, c]) / A_next
    return out


def column_softmax(const double[:, ::1] C, const double[::1] u, double mu):
    """Softmax over rows of each column of (-C + u[:, None]) / mu.

    Returns ``(P, lse)`` with ``P[:, j]`` the softmax of column ``j`` and
    ``lse[j]`` its log-normaliser.
    """
    cdef Py_ssize_t n = C.shape[0]
    cdef Py_ssize_t i, j
    cdef double t
    P = np.empty((n, n), dtype=np.float64)
    lse = np.empty(n, dtype=np.float64)
    mx_arr = np.full(n, -np.inf)
    s_arr = np.zeros(n)
    cdef double[:, ::1] p = P
    cdef double[::1] l = lse
    cdef double[::1] mx = mx_arr
    cdef double[::1] s = s_arr
    # row-major passes: logits and column maxima, then exponentials, then scaling
    for i in range(n):
        for j in range(n):
            t = (u[i] - C[i, j]) / mu
            p[i, j] = t
            if t > mx[j]:
                mx[j] = t
    for i in range(n):
        for j in range(n):
            t = exp(p[i, j] - mx[j])
            p[i, j] = t
            s[j] += t
    for i in range(n):
        for j in range(n):
            p[i, j] /= s[j]
    for j in range(n):
        l[j] = mx[j] + log(s[j])
    return P, lse


def categorical_counts(const double[::1] cdf, const double[::1] uniforms,
                       Py_ssize_t last):
    """Histogram of inverse-CDF draws; index ``i`` is chosen when
    ``cdf[i-1] <= u < cdf[i]``. Draws past the end clamp to ``last``."""
    cdef Py_ssize_t n = cdf.shape[0]
    cdef Py_ssize_t r = uniforms.shape[0]
    cdef Py_ssize_t s, lo, hi, mid
    cdef double v
    counts = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = counts
    for s in range(r):
        v = uniforms[s]
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if cdf[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        if lo > last:
            lo = last
        cnt[lo] += 1
    return counts
