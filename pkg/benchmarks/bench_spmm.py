#!/usr/bin/env python3
"""Benchmark the compiled CSR kernel against the numpy fallback.

Times the sparse-dense product that dominates every forward and backward
pass, over a range of graph sizes and feature widths, and checks that both
backends agree numerically.

Usage: python benchmarks/bench_spmm.py [--repeats N]
"""

import argparse
import time

import numpy as np

from exitgnn.graph import AdjacencyKind, build_graph, normalize
from exitgnn.kernels import fallback

try:
    from exitgnn.kernels import _spmm as compiled
except ImportError:
    compiled = None


def make_graph(n, avg_degree, seed):
    rng = np.random.default_rng(seed)
    p = min(avg_degree / max(n - 1, 1), 1.0)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    us, vs = np.nonzero(upper)
    masks = (np.zeros(n, bool), np.zeros(n, bool), np.ones(n, bool))
    return build_graph(np.column_stack([us, vs]), rng.standard_normal((n, 2)),
                       np.zeros(n, int), masks)


def bench(impl, adj, x, repeats):
    out = np.empty((adj.n_nodes, x.shape[1]))
    impl.csr_spmm_into(adj.indptr, adj.indices, adj.values, x, out)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.csr_spmm_into(adj.indptr, adj.indices, adj.values, x, out)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not built; timing fallback only")

    cases = [
        (1_000, 10, 16),
        (1_000, 10, 256),
        (5_000, 20, 64),
        (5_000, 20, 1024),
        (20_000, 15, 64),
    ]
    header = f"{'nodes':>7} {'nnz':>9} {'width':>6} {'numpy':>10} "
    header += f"{'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, deg, width in cases:
        g = make_graph(n, deg, seed=n + width)
        adj = normalize(g, AdjacencyKind.GCN_SYMMETRIC)
        x = np.ascontiguousarray(
            np.random.default_rng(0).standard_normal((n, width)))
        t_np, out_np = bench(fallback, adj, x, args.repeats)
        if compiled is not None:
            t_cy, out_cy = bench(compiled, adj, x, args.repeats)
            assert np.allclose(out_np, out_cy, atol=1e-12), "backends disagree"
            print(f"{n:>7} {len(adj.values):>9} {width:>6} "
                  f"{t_np * 1e3:>8.2f}ms {t_cy * 1e3:>8.2f}ms "
                  f"{t_np / t_cy:>7.1f}x")
        else:
            print(f"{n:>7} {len(adj.values):>9} {width:>6} "
                  f"{t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
