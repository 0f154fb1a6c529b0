"""The compiled and numpy backends must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from duonet import _kernels_py, kernels
from duonet.graph import build_graph

pytestmark = pytest.mark.skipif("compiled" not in kernels.available_backends(),
                                reason="extension not built")


def _compiled():
    from duonet import _kernels
    return _kernels


@given(st.sampled_from(["path", "cycle", "star", "complete"]), st.integers(2, 15),
       st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_laplacian_apply_parity(topology, m, n, seed):
    g = build_graph(topology, m)
    X = np.random.default_rng(seed).normal(size=(m, n))
    a = _compiled().laplacian_apply(g.indptr, g.indices, X)
    b = _kernels_py.laplacian_apply(g.indptr, g.indices, X)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@given(st.floats(1e-3, 1e3), st.floats(0, 1e3), st.integers(0, 2**32 - 1))
def test_coupled_average_parity(a, A, seed):
    rng = np.random.default_rng(seed)
    z, y = rng.normal(size=(2, 4, 3))
    assert (_compiled().coupled_average(a, z, A, y, A + a).tobytes()
            == _kernels_py.coupled_average(a, z, A, y, A + a).tobytes())


@given(st.integers(1, 8), st.floats(1e-3, 5.0), st.integers(0, 2**32 - 1))
def test_column_softmax_parity(n, mu, seed):
    rng = np.random.default_rng(seed)
    C, u = rng.uniform(0, 3, (n, n)), rng.normal(size=n) * 5
    Pa, la = _compiled().column_softmax(C, u, mu)
    Pb, lb = _kernels_py.column_softmax(C, u, mu)
    np.testing.assert_allclose(Pa, Pb, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(la, lb, rtol=1e-13)


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_categorical_counts_parity(n, seed):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(n))
    q[rng.random(n) < 0.3] = 0.0
    if q.sum() == 0:
        q[0] = 1.0
    q /= q.sum()
    cdf = np.cumsum(q) / q.sum()
    last = int(np.flatnonzero(q > 0)[-1])
    u = np.concatenate([rng.random(500), [0.0, np.nextafter(1.0, 0.0)]])
    a = _compiled().categorical_counts(cdf, u, last)
    b = _kernels_py.categorical_counts(cdf, u, last)
    np.testing.assert_array_equal(a, b)
    assert a.sum() == u.size and np.all(a[q == 0] == 0)


def test_use_backend_switches_and_restores():
    prev = kernels.use_backend("python")
    try:
        assert kernels.BACKEND == "python"
    finally:
        kernels.use_backend(prev)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
