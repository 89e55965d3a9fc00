"""Node centrality metrics and rank-based equal-size bucketization.

These drive the exit-layer policy: nodes are ranked by a centrality score and
cut into C near-equal buckets, and each bucket later gets its own exit layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import AdjacencyKind, Graph, normalize, spmm


class ConvergenceError(RuntimeError):
    """Power iteration failed to reach tolerance within the iteration budget."""


class Metric(Enum):
    DEGREE = "degree"
    KCORE = "kcore"
    PAGERANK = "pagerank"
    WALK_COUNT2 = "walk2"


@dataclass(frozen=True)
class CentralityVector:
    metric: Metric
    values: np.ndarray  # float64, length n_nodes


@dataclass(frozen=True)
class BucketAssignment:
    """Equal-size rank buckets over all nodes.

    ``boundaries`` holds the C-1 rank positions where the bucket id increments;
    ``bucket_of[v]`` is defined for every node so that validation and test
    nodes always share the same boundaries.
    """

    n_buckets: int
    boundaries: np.ndarray  # int64, length n_buckets - 1
    bucket_of: np.ndarray   # int64, length n_nodes


def degree(g: Graph) -> CentralityVector:
    return CentralityVector(Metric.DEGREE, g.degrees().astype(np.float64))


def kcore(g: Graph) -> CentralityVector:
    """Core numbers by min-degree peeling (linear-time bucket variant)."""
    n = g.n_nodes
    deg = g.degrees().astype(np.int64)
    core = deg.copy()
    if n == 0:
        return CentralityVector(Metric.KCORE, core.astype(np.float64))

    # Nodes sorted by current degree, with position/bucket bookkeeping so a
    # degree decrement is an O(1) swap toward the front.
    max_deg = int(deg.max())
    bin_start = np.zeros(max_deg + 2, dtype=np.int64)
    np.add.at(bin_start, deg + 1, 1)
    np.cumsum(bin_start, out=bin_start)
    order = np.argsort(deg, kind="stable").astype(np.int64)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    bin_ptr = bin_start[:-1].copy()

    for i in range(n):
        v = order[i]
        core[v] = deg[v]
        for u in g.neighbors(v):
            if deg[u] > deg[v]:
                du = deg[u]
                pu, pw = pos[u], bin_ptr[du]
                w = order[pw]
                if u != w:
                    order[pu], order[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bin_ptr[du] += 1
                deg[u] -= 1
    return CentralityVector(Metric.KCORE, core.astype(np.float64))


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 1000) -> CentralityVector:
    """Power iteration with uniform teleport; dangling mass spread uniformly."""
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    n = g.n_nodes
    adj = normalize(g, AdjacencyKind.RAW_SUM)
    deg = g.degrees().astype(np.float64)
    dangling = deg == 0.0
    inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contrib = spmm(adj, (x * inv_deg)[:, None])[:, 0]
        dangling_mass = x[dangling].sum()
        x_next = (1.0 - damping) / n + damping * (contrib + dangling_mass / n)
        residual = np.abs(x_next - x).sum()
        x = x_next
        if residual < tol:
            return CentralityVector(Metric.PAGERANK, x)
    raise ConvergenceError(
        f"pagerank did not converge in {max_iter} iterations (residual {residual:.3e})"
    )


def walk_count2(g: Graph) -> CentralityVector:
    """Number of length-2 walks from each node: sum of neighbor degrees."""
    adj = normalize(g, AdjacencyKind.RAW_SUM)
    deg = g.degrees().astype(np.float64)
    counts = spmm(adj, deg[:, None])[:, 0]
    return CentralityVector(Metric.WALK_COUNT2, counts)


def compute(g: Graph, metric: Metric) -> CentralityVector:
    fn = {
        Metric.DEGREE: degree,
        Metric.KCORE: kcore,
        Metric.PAGERANK: pagerank,
        Metric.WALK_COUNT2: walk_count2,
    }[metric]
    return fn(g)


def bucketize(cv: CentralityVector, n_buckets: int,
              node_subset: np.ndarray | None = None) -> BucketAssignment:
    """Cut the global centrality ranking into C contiguous near-equal buckets.

    All nodes are ranked by (value, node id) ascending and split into groups
    whose sizes differ by at most one (the first N mod C groups take the extra
    node). Ranking is always over the whole graph; ``node_subset`` only sanity
    checks that the caller's subset of interest is non-empty.
    """
    n = cv.values.shape[0]
    if n_buckets < 1:
        raise ValueError("need at least one bucket")
    if n_buckets > n:
        raise ValueError(f"more buckets ({n_buckets}) than nodes ({n})")
    if node_subset is not None and not np.asarray(node_subset, dtype=bool).any():
        raise ValueError("node subset is empty")

    order = np.lexsort((np.arange(n), cv.values))
    base, extra = divmod(n, n_buckets)
    sizes = np.full(n_buckets, base, dtype=np.int64)
    sizes[:extra] += 1
    boundaries = np.cumsum(sizes)[:-1]
    rank_bucket = np.zeros(n, dtype=np.int64)
    rank_bucket[boundaries] = 1
    np.cumsum(rank_bucket, out=rank_bucket)
    bucket_of = np.empty(n, dtype=np.int64)
    bucket_of[order] = rank_bucket
    return BucketAssignment(n_buckets=n_buckets, boundaries=boundaries,
                            bucket_of=bucket_of)
