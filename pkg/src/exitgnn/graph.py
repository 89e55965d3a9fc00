"""Immutable graph container and the sparse operators used by message passing.

Adjacency is kept in compressed sparse row form with both directions of every
undirected edge stored and neighbor lists sorted ascending. Self-loops are
never stored; the GCN-style normalization injects the self term on the fly,
while the raw-sum operator (used by the sum-aggregation flavor) leaves the
diagonal empty.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kernels import csr_spmm


class GraphValidationError(ValueError):
    """Raised when inputs violate the graph container's invariants."""


class AdjacencyKind(Enum):
    GCN_SYMMETRIC = "gcn"  # symmetric degree normalization with implicit self-loops
    RAW_SUM = "raw"        # plain 0/1 adjacency, no diagonal


@dataclass(frozen=True)
class Graph:
    """Node-classification graph: CSR adjacency, features, labels, split masks."""

    n_nodes: int
    n_edges: int               # unique undirected pairs
    indptr: np.ndarray         # int64, length n_nodes + 1
    indices: np.ndarray        # int32, sorted ascending within each row
    features: np.ndarray       # float64 (n_nodes, n_features)
    labels: np.ndarray         # int64 in [0, n_classes)
    train_mask: np.ndarray     # bool, pairwise disjoint with val/test
    val_mask: np.ndarray
    test_mask: np.ndarray
    n_classes: int

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]


@dataclass(frozen=True)
class NormAdjacency:
    """Sparse message-passing operator derived from a Graph.

    Both kinds are symmetric, which the backward pass relies on.
    """

    kind: AdjacencyKind
    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _csr_from_pairs(pairs: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric CSR (indptr, indices) from unique undirected (u, v) pairs."""
    if pairs.shape[0] == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int32)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, cols.astype(np.int32)


def build_graph(edges, features, labels, masks) -> Graph:
    """Validate and assemble a Graph from raw edge pairs.

    Self-loops in the input are dropped and duplicate undirected edges merged,
    each with a warning stating how many. Raises GraphValidationError on
    out-of-range indices, overlapping masks, bad labels, or non-finite
    features.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise GraphValidationError("features must be a 2-d matrix")
    n = features.shape[0]
    if not np.isfinite(features).all():
        raise GraphValidationError("features contain NaN or Inf")

    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise GraphValidationError(f"labels must have shape ({n},)")
    if n and labels.min() < 0:
        raise GraphValidationError("negative label")
    n_classes = int(labels.max()) + 1 if n else 0

    train_mask, val_mask, test_mask = (
        np.asarray(m, dtype=bool) for m in masks
    )
    for name, m in (("train", train_mask), ("val", val_mask), ("test", test_mask)):
        if m.shape != (n,):
            raise GraphValidationError(f"{name} mask must have shape ({n},)")
    overlap = (
        (train_mask & val_mask) | (train_mask & test_mask) | (val_mask & test_mask)
    )
    if overlap.any():
        raise GraphValidationError(
            f"masks overlap on {int(overlap.sum())} node(s)"
        )

    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0]:
        if edges.min() < 0 or edges.max() >= n:
            raise GraphValidationError("edge endpoint out of range")
    self_loops = edges[:, 0] == edges[:, 1]
    n_self = int(self_loops.sum())
    edges = edges[~self_loops]
    canon = np.sort(edges, axis=1)
    pairs = np.unique(canon, axis=0) if canon.shape[0] else canon
    n_dup = canon.shape[0] - pairs.shape[0]
    if n_self:
        warnings.warn(f"dropped {n_self} self-loop(s)", stacklevel=2)
    if n_dup:
        warnings.warn(f"merged {n_dup} duplicate edge(s)", stacklevel=2)

    indptr, indices = _csr_from_pairs(pairs, n)
    return Graph(
        n_nodes=n,
        n_edges=int(pairs.shape[0]),
        indptr=_freeze(indptr),
        indices=_freeze(indices),
        features=_freeze(features),
        labels=_freeze(labels),
        train_mask=_freeze(train_mask),
        val_mask=_freeze(val_mask),
        test_mask=_freeze(test_mask),
        n_classes=n_classes,
    )


def normalize(g: Graph, kind: AdjacencyKind) -> NormAdjacency:
    """Build the sparse operator for the requested aggregation kind.

    GCN_SYMMETRIC entries are 1/sqrt((deg(u)+1) (deg(v)+1)) over the edge
    pattern plus the diagonal; RAW_SUM keeps the plain adjacency with unit
    values and no diagonal. Isolated nodes get a bare self entry (GCN) or an
    empty row (raw).
    """
    if kind is AdjacencyKind.RAW_SUM:
        return NormAdjacency(
            kind=kind,
            n_nodes=g.n_nodes,
            indptr=g.indptr,
            indices=g.indices,
            values=_freeze(np.ones(g.indices.shape[0], dtype=np.float64)),
        )

    n = g.n_nodes
    deg = g.degrees()
    # Merge the diagonal into the sorted neighbor pattern.
    rows = np.concatenate(
        [np.repeat(np.arange(n, dtype=np.int64), deg), np.arange(n, dtype=np.int64)]
    )
    cols = np.concatenate([g.indices.astype(np.int64), np.arange(n, dtype=np.int64)])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    inv_sqrt = 1.0 / np.sqrt(deg + 1.0)
    values = inv_sqrt[rows] * inv_sqrt[cols]
    return NormAdjacency(
        kind=kind,
        n_nodes=n,
        indptr=_freeze(indptr),
        indices=_freeze(cols.astype(np.int32)),
        values=_freeze(values),
    )


def spmm(adj: NormAdjacency, x: np.ndarray) -> np.ndarray:
    """Sparse-times-dense product of the operator with an (n, k) matrix."""
    x = np.asarray(x, dtype=np.float64)
    rows = x.shape[0]
    if rows != adj.n_nodes:
        raise ValueError(
            f"dimension mismatch: operator is {adj.n_nodes} nodes, x has {rows} rows"
        )
    return csr_spmm(adj.indptr, adj.indices, adj.values, x)
