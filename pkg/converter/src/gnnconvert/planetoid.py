"""Parser for the Planetoid distribution of Cora, CiteSeer, and PubMed.

Each dataset ships as eight pickled pieces (``ind.<name>.x/y/tx/ty/allx/ally/
graph``) plus a text index (``ind.<name>.test.index``): sparse feature blocks
for labeled-train/test/all-known nodes, one-hot label blocks, an adjacency
dict over all nodes, and the positions of the test block in the global node
ordering. CiteSeer's test index has gaps (isolated test papers); the missing
rows are zero-filled, carry label 0, and belong to no split, which is the
convention of the reference loaders.

The provided splits are used as published: train = the labeled block,
validation = the next 500 nodes, test = the test index.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .container import ConversionError

PIECES = ("x", "y", "tx", "ty", "allx", "ally", "graph")
VAL_SIZE = 500


def _load_piece(src: Path, name: str, piece: str):
    path = src / f"ind.{name}.{piece}"
    if not path.exists():
        raise ConversionError(f"missing source file {path}")
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def load_planetoid(src, name: str) -> dict:
    """Assemble the full node ordering; returns features/labels/edges/splits."""
    src = Path(src)
    x, y, tx, ty, allx, ally, graph = (
        _load_piece(src, name, piece) for piece in PIECES
    )
    index_path = src / f"ind.{name}.test.index"
    if not index_path.exists():
        raise ConversionError(f"missing source file {index_path}")
    test_idx = np.array(
        [int(line) for line in index_path.read_text().split()], dtype=np.int64
    )
    test_sorted = np.sort(test_idx)

    lo, hi = int(test_sorted[0]), int(test_sorted[-1])
    if lo != allx.shape[0]:
        raise ConversionError(
            f"test index starts at {lo}, expected the end of the known "
            f"block ({allx.shape[0]})"
        )
    if hi - lo + 1 != test_sorted.size:
        # gapped test range: zero-fill the missing rows
        span = hi - lo + 1
        tx_full = sp.lil_matrix((span, x.shape[1]), dtype=np.float64)
        tx_full[test_sorted - lo] = tx
        tx = tx_full.tocsr()
        ty_full = np.zeros((span, y.shape[1]), dtype=ty.dtype)
        ty_full[test_sorted - lo] = ty
        ty = ty_full

    features = sp.vstack([allx, tx]).tolil()
    features[test_idx] = features[test_sorted]
    features = np.asarray(features.todense(), dtype=np.float64)

    onehot = np.vstack([ally, ty])
    onehot[test_idx] = onehot[test_sorted]
    labels = onehot.argmax(axis=1).astype(np.int64)

    n = features.shape[0]
    if len(graph) != n:
        raise ConversionError(
            f"adjacency covers {len(graph)} nodes, features {n}"
        )
    edges = [(u, v) for u, nbrs in graph.items() for v in nbrs]
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)

    train = np.zeros(n, dtype=bool)
    train[: y.shape[0]] = True
    val = np.zeros(n, dtype=bool)
    val[y.shape[0]: y.shape[0] + VAL_SIZE] = True
    test = np.zeros(n, dtype=bool)
    test[test_idx] = True
    return {
        "features": features,
        "labels": labels,
        "edges": edges,
        "masks": (train, val, test),
    }
