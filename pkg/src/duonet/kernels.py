"""Backend selection for the numerical inner loops.

The compiled extension ``duonet._kernels`` is used when it was built;
otherwise the numpy implementations in ``duonet._kernels_py`` are used.
Setting ``DUONET_PURE_PYTHON=1`` forces the numpy path at import time, and
:func:`use_backend` switches at runtime (the benchmark relies on this).
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("DUONET_PURE_PYTHON", "") in ("", "0"):
    _impl = _compiled
    BACKEND = "compiled"
else:
    _impl = _kernels_py
    BACKEND = "python"


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name):
    """Switch the active backend; returns the previous backend name."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    previous = BACKEND
    _impl = _BACKENDS[name]
    BACKEND = name
    return previous


def laplacian_apply(indptr, indices, X):
    return _impl.laplacian_apply(indptr, indices, np.ascontiguousarray(X, dtype=np.float64))


def coupled_average(a, z, A, y, A_next):
    return _impl.coupled_average(
        float(a), np.ascontiguousarray(z, dtype=np.float64), float(A),
        np.ascontiguousarray(y, dtype=np.float64), float(A_next),
    )


def column_softmax(C, u, mu):
    return _impl.column_softmax(
        np.ascontiguousarray(C, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64), float(mu),
    )


def categorical_counts(cdf, uniforms, last):
    return _impl.categorical_counts(
        np.ascontiguousarray(cdf, dtype=np.float64),
        np.ascontiguousarray(uniforms, dtype=np.float64), int(last),
    )
