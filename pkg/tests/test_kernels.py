import numpy as np
import pytest

from exitgnn.kernels import BACKEND, csr_spmm, fallback

from conftest import dense_gcn_operator, gcn_adj, random_graph


def _fallback_spmm(adj, x):
    out = np.empty((adj.n_nodes, x.shape[1]))
    fallback.csr_spmm_into(adj.indptr, adj.indices, adj.values,
                           np.ascontiguousarray(x), out)
    return out


class TestFallback:
    def test_matches_dense_reference(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            n = int(rng.integers(1, 40))
            g = random_graph(n, 0.25, seed=seed)
            adj = gcn_adj(g)
            x = rng.standard_normal((n, 5))
            ref = dense_gcn_operator(g) @ x
            assert np.abs(_fallback_spmm(adj, x) - ref).max() < 1e-12

    def test_empty_rows_are_zero(self):
        from exitgnn.graph import AdjacencyKind, build_graph, normalize

        masks = (np.zeros(4, bool), np.zeros(4, bool), np.ones(4, bool))
        g = build_graph([(1, 2)], np.zeros((4, 1)), [0] * 4, masks)
        adj = normalize(g, AdjacencyKind.RAW_SUM)
        out = _fallback_spmm(adj, np.ones((4, 2)))
        assert np.array_equal(out[0], [0.0, 0.0])
        assert np.array_equal(out[3], [0.0, 0.0])
        assert np.array_equal(out[1], [1.0, 1.0])

    def test_edgeless_graph(self):
        from exitgnn.graph import AdjacencyKind, build_graph, normalize

        masks = (np.zeros(3, bool), np.zeros(3, bool), np.ones(3, bool))
        g = build_graph([], np.zeros((3, 1)), [0] * 3, masks)
        adj = normalize(g, AdjacencyKind.RAW_SUM)
        assert np.array_equal(_fallback_spmm(adj, np.ones((3, 2))),
                              np.zeros((3, 2)))


@pytest.mark.skipif(BACKEND != "compiled", reason="extension not built")
class TestCompiledAgainstFallback:
    def test_backends_agree(self):
        rng = np.random.default_rng(1)
        for seed in range(10):
            n = int(rng.integers(2, 60))
            g = random_graph(n, 0.2, seed=100 + seed)
            adj = gcn_adj(g)
            x = rng.standard_normal((n, 7))
            compiled = csr_spmm(adj.indptr, adj.indices, adj.values, x)
            assert np.allclose(compiled, _fallback_spmm(adj, x), atol=1e-13)

    def test_vector_input_promoted(self):
        g = random_graph(6, 0.5, seed=2)
        adj = gcn_adj(g)
        out = csr_spmm(adj.indptr, adj.indices, adj.values, np.ones(6))
        assert out.shape == (6, 1)
