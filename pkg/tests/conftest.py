"""Shared builders and independent oracles used across the suite."""

import numpy as np
import pytest

from exitgnn.graph import AdjacencyKind, build_graph, normalize


def random_graph(n, p, d=4, c=3, seed=0):
    """Erdos-Renyi graph with random features/labels and a 50/25/25 split."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    us, vs = np.nonzero(upper)
    edges = np.column_stack([us, vs])
    feats = rng.standard_normal((n, d))
    labels = rng.integers(0, c, n)
    labels[:c] = np.arange(c)  # every class present
    order = rng.permutation(n)
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    train[order[: n // 2]] = True
    val[order[n // 2 : (3 * n) // 4]] = True
    test[order[(3 * n) // 4 :]] = True
    return build_graph(edges, feats, labels, (train, val, test))


def dense_adjacency(g):
    """0/1 adjacency as a dense matrix (oracle for sparse ops)."""
    a = np.zeros((g.n_nodes, g.n_nodes))
    for v in range(g.n_nodes):
        a[v, g.neighbors(v)] = 1.0
    return a


def dense_gcn_operator(g):
    """Dense reference of the degree-normalized operator with self-loops."""
    a = dense_adjacency(g) + np.eye(g.n_nodes)
    inv = 1.0 / np.sqrt(a.sum(axis=1))
    return inv[:, None] * a * inv[None, :]


def naive_kcore(g):
    """Peeling oracle: for each k, repeatedly delete all nodes of degree < k."""
    n = g.n_nodes
    a = dense_adjacency(g)
    core = np.zeros(n, dtype=int)
    k = 1
    while True:
        alive = np.ones(n, dtype=bool)
        changed = True
        while changed:
            deg = (a[alive][:, alive]).sum(axis=1)
            drop = np.flatnonzero(alive)[deg < k]
            changed = drop.size > 0
            alive[drop] = False
        if not alive.any():
            return core
        core[alive] = k
        k += 1


def fd_gradient(f, tensor, step=1e-5):
    """Central finite differences of scalar f() w.r.t. every tensor entry."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f()
        flat[i] = orig - step
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def rel_err(a, b):
    """Elementwise |a-b| / max(|a|, |b|, 1), maxed over entries."""
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float((np.abs(a - b) / denom).max())


@pytest.fixture
def path3():
    """Path 0-1-2 with simple features."""
    feats = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    masks = (
        np.array([True, False, False]),
        np.array([False, True, False]),
        np.array([False, False, True]),
    )
    return build_graph([(0, 1), (1, 2)], feats, [0, 1, 0], masks)


def gcn_adj(g):
    return normalize(g, AdjacencyKind.GCN_SYMMETRIC)


def raw_adj(g):
    return normalize(g, AdjacencyKind.RAW_SUM)
