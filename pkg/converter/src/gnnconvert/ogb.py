"""Parser for the OGB arxiv raw download layout.

Expects the extracted archive: ``raw/edge.csv(.gz)``, ``raw/node-feat.csv(.gz)``,
``raw/node-label.csv(.gz)``, and the provided time-based splits under
``split/time/{train,valid,test}.csv(.gz)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .container import ConversionError


def _find(root: Path, rel: str) -> Path:
    for suffix in ("", ".gz"):
        p = root / (rel + suffix)
        if p.exists():
            return p
    raise ConversionError(f"missing source file {root / rel}[.gz]")


def _load_csv(path: Path, dtype) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=2)
    return arr


def load_ogb_arxiv(src) -> dict:
    src = Path(src)
    edges = _load_csv(_find(src, "raw/edge.csv"), np.int64)
    features = _load_csv(_find(src, "raw/node-feat.csv"), np.float64)
    labels = _load_csv(_find(src, "raw/node-label.csv"), np.int64)[:, 0]
    n = features.shape[0]
    masks = []
    for split in ("train", "valid", "test"):
        idx = _load_csv(_find(src, f"split/time/{split}.csv"), np.int64)[:, 0]
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
        masks.append(mask)
    return {
        "features": features,
        "labels": labels,
        "edges": edges,
        "masks": tuple(masks),
    }
