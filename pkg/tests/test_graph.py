import numpy as np
import pytest
from hypothesis import given, strategies as st

from duonet.errors import DimensionMismatch, DisconnectedGraph, InvalidEdge
from duonet.graph import apply_sqrtW, apply_W, build_graph, from_edges, read_edge_list


def test_path_laplacian(p3):
    np.testing.assert_array_equal(p3.laplacian, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


@pytest.mark.parametrize("topology, lmax, lmin, chi", [
    ("complete", 4.0, 4.0, 1.0),
    ("star", 4.0, 1.0, 4.0),
])
def test_spectrum_m4(topology, lmax, lmin, chi):
    g = build_graph(topology, 4)
    assert g.lambda_max == pytest.approx(lmax, abs=1e-12)
    assert g.lambda_min_plus == pytest.approx(lmin, abs=1e-12)
    assert g.chi == pytest.approx(chi, abs=1e-10)


def test_apply_W_examples(p3):
    np.testing.assert_allclose(apply_W(p3, np.array([0.0, 3.0, 6.0])), [-3, 0, 3])
    k2 = build_graph("complete", 2)
    np.testing.assert_allclose(apply_W(k2, np.eye(2)), [[1, -1], [-1, 1]])


def test_apply_W_reads_only_neighbours(p3):
    # perturbing node 2 leaves node 0's output unchanged on a path
    X = np.arange(6.0).reshape(3, 2)
    Y = X.copy()
    Y[2] += 100.0
    np.testing.assert_array_equal(apply_W(p3, X)[0], apply_W(p3, Y)[0])


def test_sqrtW_examples(p3):
    s = p3.sqrt_laplacian()
    x = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(apply_sqrtW(s, apply_sqrtW(s, x)), [1, -1, 0], atol=1e-12)
    np.testing.assert_allclose(apply_sqrtW(s, np.full((3, 2), 7.0)), 0.0, atol=1e-12)
    np.testing.assert_allclose(s.matrix() @ s.matrix(), p3.laplacian, atol=1e-8)
    assert np.linalg.norm(s.matrix() @ np.ones(3)) <= 1e-8


def test_errors(p3):
    with pytest.raises(DisconnectedGraph):
        from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(InvalidEdge):
        build_graph("edge_list", 3, edges=[(0, 3)])
    with pytest.raises(DimensionMismatch):
        apply_W(p3, np.zeros((4, 1)))
    with pytest.raises(DimensionMismatch):
        apply_sqrtW(p3.sqrt_laplacian(), np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        build_graph("hypercube", 4)


def test_single_node_graph():
    g = build_graph("complete", 1)
    assert g.lambda_max == 0.0 and g.chi == 1.0
    np.testing.assert_array_equal(apply_W(g, np.ones((1, 3))), 0.0)


def test_edge_list_file(tmp_path):
    f = tmp_path / "edges.txt"
    f.write_text("0 1\n# comment\n1 2\n\n2 0\n")
    g = build_graph("edge_list", 3, edges=read_edge_list(f))
    assert g.num_edges == 3
    assert g.chi == pytest.approx(1.0)
    f.write_text("0 1 2\n")
    with pytest.raises(InvalidEdge):
        read_edge_list(f)


def test_erdos_renyi_is_connected_and_seeded():
    a = build_graph("erdos_renyi", 12, p=0.3, seed=4)
    b = build_graph("erdos_renyi", 12, p=0.3, seed=4)
    assert a.edges == b.edges
    assert np.count_nonzero(np.linalg.eigvalsh(a.laplacian) < 1e-9) == 1
    with pytest.raises(DisconnectedGraph):
        build_graph("erdos_renyi", 30, p=0.01, seed=0)


graphs = st.one_of(
    st.tuples(st.sampled_from(["path", "cycle", "star", "complete"]), st.integers(2, 12),
              st.just(0)),
    st.tuples(st.just("erdos_renyi"), st.integers(3, 12), st.integers(0, 1000)),
)


@given(graphs, st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_operator_properties(case, n, seed):
    topology, m, gseed = case
    g = build_graph(topology, m, p=0.6, seed=gseed)
    s = g.sqrt_laplacian()
    X = np.random.default_rng(seed).standard_normal((m, n))
    L = g.laplacian
    np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_array_equal(L, L.T)
    assert g.chi >= 1.0
    WX = apply_W(g, X)
    np.testing.assert_allclose(WX, L @ X, atol=1e-12)
    nx = np.linalg.norm(X)
    assert np.linalg.norm(apply_sqrtW(s, apply_sqrtW(s, X)) - WX) <= 1e-8 * nx
    assert np.linalg.norm(WX) <= g.lambda_max * nx * (1 + 1e-12)
    assert np.linalg.norm(apply_sqrtW(s, X)) <= np.sqrt(g.lambda_max) * nx * (1 + 1e-12)


@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_chi_invariant_under_relabeling(m, seed):
    rng = np.random.default_rng(seed)
    g = build_graph("erdos_renyi", m, p=0.5, seed=seed % 997)
    perm = rng.permutation(m)
    h = from_edges(m, [(perm[i], perm[j]) for i, j in g.edges])
    assert h.chi == pytest.approx(g.chi, rel=1e-10)
