"""Bit-exact on-disk dataset container.

A dataset directory holds a text manifest plus little-endian binary payloads:

* ``manifest.txt`` -- counts, endianness tag, and a checksummed file list
* ``features.bin`` -- float64 feature matrix, row-major
* ``edges.bin``    -- uint32 (u, v) pairs, one per undirected edge, with
  u < v, sorted lexicographically
* ``labels.bin``   -- uint16 class ids
* ``masks.bin``    -- three uint8 blocks of length n_nodes (train, val, test)
* ``regions.bin``  -- optional uint8 region id per node (synthetic graphs)

Write-then-load is the identity; loading cross-checks checksums, sizes, and
counts before rebuilding (and thereby revalidating) the graph.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .graph import Graph, build_graph


class DatasetError(ValueError):
    """Container is missing, corrupt, or inconsistent with its manifest."""


_MANIFEST_MAGIC = "exitgnn-dataset v1"
_PAYLOADS = ("features.bin", "edges.bin", "labels.bin", "masks.bin")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def undirected_pairs(g: Graph) -> np.ndarray:
    """Unique (u, v) pairs with u < v, sorted lexicographically."""
    rows = np.repeat(np.arange(g.n_nodes, dtype=np.int64), g.degrees())
    cols = g.indices.astype(np.int64)
    keep = rows < cols
    return np.column_stack([rows[keep], cols[keep]])


def save_dataset(g: Graph, out_dir, name: str = "dataset", regions=None,
                 notes=()) -> Path:
    """Write the container; returns the manifest path."""
    if g.n_features == 0:
        raise DatasetError("refusing to save a graph with zero feature columns")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    payloads = {
        "features.bin": np.ascontiguousarray(g.features, dtype="<f8").tobytes(),
        "edges.bin": np.ascontiguousarray(
            undirected_pairs(g), dtype="<u4").tobytes(),
        "labels.bin": np.ascontiguousarray(g.labels, dtype="<u2").tobytes(),
        "masks.bin": np.concatenate(
            [g.train_mask, g.val_mask, g.test_mask]
        ).astype("u1").tobytes(),
    }
    if regions is not None:
        regions = np.asarray(regions)
        if regions.shape != (g.n_nodes,):
            raise DatasetError("regions must assign one id per node")
        payloads["regions.bin"] = regions.astype("u1").tobytes()

    lines = [
        _MANIFEST_MAGIC,
        f"name={name}",
        f"n_nodes={g.n_nodes}",
        f"n_edges={g.n_edges}",
        f"n_features={g.n_features}",
        f"n_classes={g.n_classes}",
        "endianness=little",
    ]
    for fname, blob in payloads.items():
        (out / fname).write_bytes(blob)
        lines.append(f"file={fname} size={len(blob)} sha256={_sha256(blob)}")
    for note in notes:
        lines.append(f"note={note}")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="ascii")
    return manifest


def _parse_manifest(path: Path) -> tuple[dict, list[dict], list[str]]:
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise DatasetError(f"no manifest at {path}") from None
    lines = text.splitlines()
    if not lines or lines[0] != _MANIFEST_MAGIC:
        raise DatasetError(f"{path} is not a dataset manifest")
    fields, files, notes = {}, [], []
    for line in lines[1:]:
        if not line:
            continue
        key, _, value = line.partition("=")
        if key == "file":
            entry = dict(part.split("=", 1) for part in ("name=" + value).split(" "))
            files.append(entry)
        elif key == "note":
            notes.append(value)
        else:
            fields[key] = value
    return fields, files, notes


def _read_payload(dir_path: Path, entry: dict) -> bytes:
    fpath = dir_path / entry["name"]
    try:
        blob = fpath.read_bytes()
    except FileNotFoundError:
        raise DatasetError(f"missing payload {fpath}") from None
    if len(blob) != int(entry["size"]):
        raise DatasetError(
            f"{fpath}: size {len(blob)} != manifest {entry['size']}"
        )
    if _sha256(blob) != entry["sha256"]:
        raise DatasetError(f"{fpath}: checksum mismatch")
    return blob


def load_dataset(dir_path) -> Graph:
    """Load and validate a container directory."""
    dir_path = Path(dir_path)
    fields, files, _ = _parse_manifest(dir_path / "manifest.txt")
    if fields.get("endianness") != "little":
        raise DatasetError("unsupported endianness tag")
    by_name = {e["name"]: e for e in files}
    for required in _PAYLOADS:
        if required not in by_name:
            raise DatasetError(f"manifest lists no {required}")

    n = int(fields["n_nodes"])
    d = int(fields["n_features"])
    feat = np.frombuffer(_read_payload(dir_path, by_name["features.bin"]),
                         dtype="<f8")
    if feat.size != n * d:
        raise DatasetError("features payload does not match n_nodes*n_features")
    feat = feat.reshape(n, d)

    pairs = np.frombuffer(_read_payload(dir_path, by_name["edges.bin"]),
                          dtype="<u4").reshape(-1, 2).astype(np.int64)
    labels = np.frombuffer(_read_payload(dir_path, by_name["labels.bin"]),
                           dtype="<u2").astype(np.int64)
    if labels.size != n:
        raise DatasetError("labels payload does not match n_nodes")

    masks_raw = np.frombuffer(_read_payload(dir_path, by_name["masks.bin"]),
                              dtype="u1")
    if masks_raw.size != 3 * n:
        raise DatasetError("masks payload must hold three blocks of n_nodes")
    masks = tuple(masks_raw[i * n:(i + 1) * n].astype(bool) for i in range(3))

    g = build_graph(pairs, feat, labels, masks)
    if g.n_edges != int(fields["n_edges"]):
        raise DatasetError(
            f"edge count {g.n_edges} != manifest {fields['n_edges']}"
        )
    if g.n_classes != int(fields["n_classes"]):
        raise DatasetError(
            f"class count {g.n_classes} != manifest {fields['n_classes']}"
        )
    return g


def load_regions(dir_path) -> np.ndarray:
    """Region ids for a synthetic container (requires regions.bin)."""
    dir_path = Path(dir_path)
    fields, files, _ = _parse_manifest(dir_path / "manifest.txt")
    by_name = {e["name"]: e for e in files}
    if "regions.bin" not in by_name:
        raise DatasetError(f"{dir_path} has no region payload")
    raw = np.frombuffer(_read_payload(dir_path, by_name["regions.bin"]),
                        dtype="u1")
    if raw.size != int(fields["n_nodes"]):
        raise DatasetError("regions payload does not match n_nodes")
    return raw.astype(np.int64)
