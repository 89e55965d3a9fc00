"""Miniature source-distribution fixtures for each supported format."""

import gzip
import pickle
from collections import defaultdict

import numpy as np
import pytest
import scipy.sparse as sp


def make_planetoid_source(tmp_path, name="cora", gapped=False, seed=0):
    """Tiny but structurally faithful Planetoid pickle set.

    4 labeled train nodes, 516 further known nodes (so the 500-node
    validation block fits), and 6 test nodes appended at the end. The gapped
    variant omits two test indices, mimicking CiteSeer's isolated papers.
    """
    rng = np.random.default_rng(seed)
    d, c = 8, 3
    n_train, n_allx, n_test_span = 4, 520, 6

    allx = sp.csr_matrix((rng.random((n_allx, d)) < 0.3).astype(np.float32))
    ally = np.eye(c, dtype=np.int32)[rng.integers(0, c, n_allx)]
    x = allx[:n_train]
    y = ally[:n_train]

    if gapped:
        test_idx = [n_allx + 0, n_allx + 2, n_allx + 5, n_allx + 1]
    else:
        test_idx = [n_allx + i for i in (3, 0, 1, 2, 4, 5)]
    tx = sp.csr_matrix(
        (rng.random((len(test_idx), d)) < 0.3).astype(np.float32))
    ty = np.eye(c, dtype=np.int32)[rng.integers(0, c, len(test_idx))]

    n = n_allx + n_test_span
    graph = defaultdict(list)
    rng2 = np.random.default_rng(seed + 1)
    for _ in range(3 * n):
        u, v = rng2.integers(0, n, 2)
        graph[int(u)].append(int(v))
        graph[int(v)].append(int(u))
    graph[0].append(0)          # self-loop, must be dropped
    graph[1].append(2)
    graph[1].append(2)          # duplicate, must be merged
    for v in range(n):
        graph[int(v)]           # materialize every key

    src = tmp_path / f"planetoid-{name}{'-gap' if gapped else ''}"
    src.mkdir()
    for piece, obj in (("x", x), ("y", y), ("tx", tx), ("ty", ty),
                       ("allx", allx), ("ally", ally), ("graph", dict(graph))):
        with open(src / f"ind.{name}.{piece}", "wb") as fh:
            pickle.dump(obj, fh)
    (src / f"ind.{name}.test.index").write_text(
        "\n".join(str(i) for i in test_idx) + "\n")
    return src, {"n_nodes": n, "n_train": n_train, "test_idx": test_idx}


def make_npz_source(tmp_path, seed=0):
    rng = np.random.default_rng(seed)
    n, d, c = 40, 6, 4
    adj = sp.random(n, n, density=0.1, format="csr", random_state=7,
                    data_rvs=lambda k: np.ones(k))
    attr = sp.csr_matrix(rng.random((n, d)) * (rng.random((n, d)) < 0.5))
    labels = rng.integers(0, c, n)
    labels[:c] = np.arange(c)
    path = tmp_path / "tiny_coauthor.npz"
    np.savez(path,
             adj_data=adj.data, adj_indices=adj.indices,
             adj_indptr=adj.indptr, adj_shape=np.array(adj.shape),
             attr_data=attr.data, attr_indices=attr.indices,
             attr_indptr=attr.indptr, attr_shape=np.array(attr.shape),
             labels=labels)
    return path, {"n_nodes": n, "n_classes": c}


def make_ogb_source(tmp_path, seed=0):
    rng = np.random.default_rng(seed)
    n, d, c = 30, 5, 3
    src = tmp_path / "arxiv"
    (src / "raw").mkdir(parents=True)
    (src / "split" / "time").mkdir(parents=True)

    edges = rng.integers(0, n, (60, 2))
    feats = rng.standard_normal((n, d))
    labels = rng.integers(0, c, n)
    labels[:c] = np.arange(c)

    def write_gz(rel, rows, fmt):
        with gzip.open(src / rel, "wt") as fh:
            for row in rows:
                fh.write(",".join(fmt(v) for v in np.atleast_1d(row)) + "\n")

    write_gz("raw/edge.csv.gz", edges, str)
    write_gz("raw/node-feat.csv.gz", feats, lambda v: f"{v:.6f}")
    write_gz("raw/node-label.csv.gz", labels, str)
    order = rng.permutation(n)
    write_gz("split/time/train.csv.gz", order[:15], str)
    write_gz("split/time/valid.csv.gz", order[15:22], str)
    write_gz("split/time/test.csv.gz", order[22:], str)
    return src, {"n_nodes": n}


@pytest.fixture
def planetoid_source(tmp_path):
    return make_planetoid_source(tmp_path)


@pytest.fixture
def gapped_planetoid_source(tmp_path):
    return make_planetoid_source(tmp_path, name="citeseer", gapped=True)


@pytest.fixture
def npz_source(tmp_path):
    return make_npz_source(tmp_path)


@pytest.fixture
def ogb_source(tmp_path):
    return make_ogb_source(tmp_path)
