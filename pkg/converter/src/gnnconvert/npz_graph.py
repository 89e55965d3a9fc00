"""Parser for the coauthor-style ``.npz`` graph archives.

The archive stores the adjacency and the attribute matrix in CSR pieces
(``adj_data/indices/indptr/shape``, ``attr_*``) plus a dense ``labels``
vector. No splits are provided; the caller supplies split fractions and a
seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .container import ConversionError


def load_npz_graph(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConversionError(f"missing source file {path}")
    with np.load(path, allow_pickle=True) as loader:
        data = dict(loader)
    for key in ("adj_data", "adj_indices", "adj_indptr", "adj_shape",
                "attr_data", "attr_indices", "attr_indptr", "attr_shape",
                "labels"):
        if key not in data:
            raise ConversionError(f"{path} lacks array {key!r}")
    adj = sp.csr_matrix(
        (data["adj_data"], data["adj_indices"], data["adj_indptr"]),
        shape=tuple(data["adj_shape"]),
    ).tocoo()
    attr = sp.csr_matrix(
        (data["attr_data"], data["attr_indices"], data["attr_indptr"]),
        shape=tuple(data["attr_shape"]),
    )
    edges = np.column_stack([adj.row, adj.col]).astype(np.int64)
    return {
        "features": np.asarray(attr.todense(), dtype=np.float64),
        "labels": np.asarray(data["labels"], dtype=np.int64),
        "edges": edges,
    }
