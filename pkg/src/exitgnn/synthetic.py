"""Synthetic graphs for the depth-sensitivity experiment.

Two builders:

* ``core_split_synthetic`` carves a sparse and a dense region out of a real
  source graph by core number, samples both regions to the same size with
  matching label histograms, and returns their disjoint union.
* ``planted_two_block`` plants the same situation from scratch: one densely
  connected weakly homophilous block and one sparse strongly homophilous
  block, with weak node features. It needs no external data.

Both attach stratified train/val/test masks and a per-node region id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centrality import kcore
from .graph import Graph, build_graph


class SynthesisError(ValueError):
    """The requested synthetic graph cannot be built from this source."""


@dataclass
class SyntheticSpec:
    n_total: int = 5000
    core_threshold: int | None = None   # None -> median core number of source
    seed: int = 0
    split_fracs: tuple[float, float, float] = (0.6, 0.2, 0.2)


def _stratified_masks(labels, regions, fracs, rng):
    """Seeded train/val/test split, stratified by (region, label)."""
    n = labels.shape[0]
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for r in np.unique(regions):
        for y in np.unique(labels):
            idx = np.flatnonzero((regions == r) & (labels == y))
            idx = idx[rng.permutation(idx.size)]
            n_train = max(1, int(round(fracs[0] * idx.size)))
            n_val = max(1, int(round(fracs[1] * idx.size)))
            n_train = min(n_train, idx.size - 2) if idx.size >= 3 else 1
            train[idx[:n_train]] = True
            val[idx[n_train:n_train + n_val]] = True
            test[idx[n_train + n_val:]] = True
    return train, val, test


def _induced_pairs(g: Graph, nodes: np.ndarray, offset: int,
                   new_id: np.ndarray) -> list[tuple[int, int]]:
    pairs = []
    member = np.zeros(g.n_nodes, dtype=bool)
    member[nodes] = True
    for u in nodes:
        for v in g.neighbors(u):
            if member[v] and u < v:
                pairs.append((new_id[u] + offset, new_id[v] + offset))
    return pairs


def core_split_synthetic(source: Graph, spec: SyntheticSpec
                         ) -> tuple[Graph, np.ndarray]:
    """Build the merged sparse/dense graph from a source graph.

    Nodes with core number >= threshold form the dense pool, the rest the
    sparse pool. Labels kept are those present in both pools with at least
    floor(n_total / (2 * n_kept_labels)) nodes (computed iteratively until
    stable). Each region samples n_total/2 nodes with identical per-label
    counts, and the output is the disjoint union of the two induced subgraphs
    (no cross edges) plus a region id per node.
    """
    if spec.n_total % 2:
        raise SynthesisError("n_total must be even (two equal regions)")
    half = spec.n_total // 2
    cores = kcore(source).values
    threshold = spec.core_threshold
    if threshold is None:
        threshold = float(np.median(cores))
    dense_pool = np.flatnonzero(cores >= threshold)
    sparse_pool = np.flatnonzero(cores < threshold)
    if dense_pool.size == 0 or sparse_pool.size == 0:
        raise SynthesisError(
            f"core threshold {threshold} leaves an empty region "
            f"(dense {dense_pool.size}, sparse {sparse_pool.size})"
        )

    labels = source.labels
    kept = np.unique(labels)
    while True:
        need = half // max(kept.size, 1)
        ok = [
            y for y in kept
            if (labels[dense_pool] == y).sum() >= need
            and (labels[sparse_pool] == y).sum() >= need
        ]
        ok = np.asarray(ok, dtype=np.int64)
        if ok.size == kept.size:
            break
        if ok.size == 0:
            raise SynthesisError("no label is sufficiently present in both regions")
        kept = ok

    # Common per-label allocation, capped by whichever pool is scarcer.
    caps = np.array([
        min((labels[dense_pool] == y).sum(), (labels[sparse_pool] == y).sum())
        for y in kept
    ], dtype=np.int64)
    if caps.sum() < half:
        raise SynthesisError(
            f"pools support only {int(caps.sum())} nodes per region, "
            f"need {half}"
        )
    alloc = np.minimum(caps, np.full(kept.size, half // kept.size))
    while alloc.sum() < half:
        room = np.flatnonzero(alloc < caps)
        take = room[np.argmax(caps[room] - alloc[room])]
        alloc[take] += 1

    rng = np.random.default_rng(spec.seed)
    chosen = {}
    for pool_name, pool in (("dense", dense_pool), ("sparse", sparse_pool)):
        sel = []
        for y, k in zip(kept, alloc):
            cand = pool[labels[pool] == y]
            sel.append(rng.choice(cand, size=int(k), replace=False))
        chosen[pool_name] = np.sort(np.concatenate(sel))

    # Relabel classes densely so the output graph's class count is n_kept.
    class_of = {int(y): i for i, y in enumerate(kept)}
    new_id = np.zeros(source.n_nodes, dtype=np.int64)
    parts, pairs, regions = [], [], []
    offset = 0
    for rid, pool_name in enumerate(("sparse", "dense")):
        nodes = chosen[pool_name]
        new_id[nodes] = np.arange(nodes.size)
        pairs += _induced_pairs(source, nodes, offset, new_id)
        parts.append(nodes)
        regions.append(np.full(nodes.size, rid, dtype=np.int64))
        offset += nodes.size

    all_nodes = np.concatenate(parts)
    feats = source.features[all_nodes]
    labs = np.array([class_of[int(y)] for y in labels[all_nodes]], dtype=np.int64)
    regions = np.concatenate(regions)
    masks = _stratified_masks(labs, regions, spec.split_fracs, rng)
    g = build_graph(pairs, feats, labs, masks)
    return g, regions


def planted_two_block(n_per_region: int = 500, n_classes: int = 4,
                      feature_signal: float = 0.6, feature_noise: float = 1.0,
                      dense_intra_degree: float = 30.0,
                      dense_inter_degree: float = 20.0,
                      sparse_intra_degree: float = 4.0,
                      sparse_inter_degree: float = 1.0,
                      seed: int = 0,
                      split_fracs=(0.5, 0.2, 0.3)) -> tuple[Graph, np.ndarray]:
    """Plant a sparse homophilous block next to a dense mixed block.

    The ``*_degree`` knobs are expected neighbor counts per node: same-class
    (intra) and other-class (inter). Region 0 (sparse) has few, mostly
    same-class edges, so aggregation keeps helping for a few hops; region 1
    (dense) has many edges with weaker class alignment, so a deep stack mixes
    its classes together quickly. Features are a scaled one-hot of the label
    plus unit Gaussian noise: informative but weak on their own.
    """
    rng = np.random.default_rng(seed)
    n = 2 * n_per_region
    regions = np.repeat(np.array([0, 1], dtype=np.int64), n_per_region)
    labels = np.concatenate([
        np.arange(n_per_region, dtype=np.int64) % n_classes,
        np.arange(n_per_region, dtype=np.int64) % n_classes,
    ])

    n_same = n_per_region / n_classes          # nodes sharing a label
    n_diff = n_per_region - n_same
    pairs = []
    for rid, intra, inter in (
        (0, sparse_intra_degree, sparse_inter_degree),
        (1, dense_intra_degree, dense_inter_degree),
    ):
        nodes = np.flatnonzero(regions == rid)
        same = labels[nodes][:, None] == labels[nodes][None, :]
        p = np.where(same, intra / n_same, inter / n_diff)
        upper = np.triu(rng.random((nodes.size, nodes.size)) < p, k=1)
        us, vs = np.nonzero(upper)
        pairs.append(np.column_stack([nodes[us], nodes[vs]]))
    pairs = np.concatenate(pairs)

    feats = feature_signal * np.eye(n_classes)[labels]
    feats = feats + feature_noise * rng.standard_normal((n, n_classes))
    masks = _stratified_masks(labels, regions, split_fracs, rng)
    g = build_graph(pairs, feats, labels, masks)
    return g, regions
