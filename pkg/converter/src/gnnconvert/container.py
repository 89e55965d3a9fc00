"""Writer for the exitgnn dataset container format.

Deliberately self-contained: the converter talks to the main package only
through this on-disk format (text manifest with sha256-checksummed
little-endian payloads), never through its API.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

MAGIC = "exitgnn-dataset v1"


class ConversionError(ValueError):
    """Source data is missing, malformed, or inconsistent."""


def canonical_pairs(edges: np.ndarray, n_nodes: int) -> tuple[np.ndarray, dict]:
    """Unique undirected (u, v) pairs with u < v from raw directed edges.

    Returns the pairs plus bookkeeping counts (raw entries, self-loops
    dropped, duplicates merged) for the manifest notes.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
        raise ConversionError("edge endpoint out of range")
    raw = edges.shape[0]
    self_loops = edges[:, 0] == edges[:, 1]
    edges = edges[~self_loops]
    canon = np.sort(edges, axis=1)
    pairs = np.unique(canon, axis=0) if canon.size else canon
    counts = {
        "raw_directed_entries": raw,
        "self_loops_dropped": int(self_loops.sum()),
        "duplicates_merged": int(canon.shape[0] - pairs.shape[0]),
    }
    return pairs, counts


def stratified_split(labels: np.ndarray, fracs: tuple[float, float, float],
                     seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded per-label random split for sources without provided splits."""
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ConversionError(f"split fractions must sum to 1, got {fracs}")
    rng = np.random.default_rng(seed)
    n = labels.shape[0]
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for y in np.unique(labels):
        idx = np.flatnonzero(labels == y)
        idx = idx[rng.permutation(idx.size)]
        n_train = int(round(fracs[0] * idx.size))
        n_val = int(round(fracs[1] * idx.size))
        train[idx[:n_train]] = True
        val[idx[n_train:n_train + n_val]] = True
        test[idx[n_train + n_val:]] = True
    return train, val, test


def write_container(out_dir, name: str, features: np.ndarray,
                    pairs: np.ndarray, labels: np.ndarray,
                    masks, notes=()) -> Path:
    """Write manifest + payloads; returns the manifest path."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    n, d = features.shape
    if d == 0:
        raise ConversionError("refusing to write zero feature columns")
    if not np.isfinite(features).all():
        raise ConversionError("non-finite feature values")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,) or (n and labels.min() < 0):
        raise ConversionError("bad label vector")
    n_classes = int(labels.max()) + 1 if n else 0
    train, val, test = (np.asarray(m, dtype=bool) for m in masks)
    if (train & val).any() or (train & test).any() or (val & test).any():
        raise ConversionError("split masks overlap")

    order = np.lexsort((pairs[:, 1], pairs[:, 0])) if pairs.size else []
    pairs = pairs[order] if pairs.size else pairs.reshape(0, 2)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payloads = {
        "features.bin": features.astype("<f8").tobytes(),
        "edges.bin": np.ascontiguousarray(pairs, dtype="<u4").tobytes(),
        "labels.bin": labels.astype("<u2").tobytes(),
        "masks.bin": np.concatenate([train, val, test]).astype("u1").tobytes(),
    }
    lines = [
        MAGIC,
        f"name={name}",
        f"n_nodes={n}",
        f"n_edges={pairs.shape[0]}",
        f"n_features={d}",
        f"n_classes={n_classes}",
        "endianness=little",
    ]
    for fname, blob in payloads.items():
        (out / fname).write_bytes(blob)
        digest = hashlib.sha256(blob).hexdigest()
        lines.append(f"file={fname} size={len(blob)} sha256={digest}")
    for note in notes:
        lines.append(f"note={note}")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="ascii")
    return manifest
