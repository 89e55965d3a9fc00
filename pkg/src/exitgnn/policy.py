"""Exit-layer selection: oracle accuracy and the centrality-bucket policy.

The prediction cube holds one probability row per (node, layer). A policy maps
every node, through its centrality bucket, to the layer whose prediction it
uses. Policies are fit on validation nodes only; test labels enter only at
evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centrality import BucketAssignment


@dataclass(frozen=True)
class ExitPolicy:
    metric: str
    n_buckets: int
    assignment: BucketAssignment
    exit_layer: np.ndarray  # int64 per bucket, in [0, n_layers)


def _check_cube(cube: np.ndarray):
    if cube.ndim != 3:
        raise ValueError("prediction cube must be (nodes, layers, classes)")


def predictions(cube: np.ndarray) -> np.ndarray:
    """Argmax class per (node, layer); ties go to the lowest class id."""
    _check_cube(cube)
    return cube.argmax(axis=2)


def per_layer_accuracy(cube: np.ndarray, labels: np.ndarray,
                       mask: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("empty evaluation mask")
    pred = predictions(cube)[idx]
    return (pred == labels[idx][:, None]).mean(axis=0)


def oracle_accuracy(cube: np.ndarray, labels: np.ndarray,
                    test_mask: np.ndarray) -> float:
    """Fraction of masked nodes that any layer classifies correctly."""
    idx = np.flatnonzero(test_mask)
    if idx.size == 0:
        raise ValueError("empty test mask")
    pred = predictions(cube)[idx]
    hit = (pred == labels[idx][:, None]).any(axis=1)
    return float(hit.mean())


def learn_policy(cube: np.ndarray, labels: np.ndarray, val_mask: np.ndarray,
                 assignment: BucketAssignment, metric: str = "") -> ExitPolicy:
    """Pick each bucket's exit layer by validation accuracy within the bucket.

    Layer ties break toward the smaller (cheaper) layer. A bucket without
    validation nodes falls back to the globally best validation layer.
    """
    _check_cube(cube)
    val_idx = np.flatnonzero(val_mask)
    if val_idx.size == 0:
        raise ValueError("empty validation mask")
    pred = predictions(cube)
    correct = pred[val_idx] == labels[val_idx][:, None]
    global_best = int(correct.mean(axis=0).argmax())

    exit_layer = np.empty(assignment.n_buckets, dtype=np.int64)
    buckets = assignment.bucket_of[val_idx]
    for b in range(assignment.n_buckets):
        in_bucket = correct[buckets == b]
        if in_bucket.shape[0] == 0:
            exit_layer[b] = global_best
        else:
            exit_layer[b] = int(in_bucket.mean(axis=0).argmax())
    return ExitPolicy(metric=metric, n_buckets=assignment.n_buckets,
                      assignment=assignment, exit_layer=exit_layer)


def apply_policy(cube: np.ndarray, policy: ExitPolicy, test_mask: np.ndarray,
                 labels: np.ndarray) -> tuple[float, list[tuple]]:
    """Classify each masked node at its bucket's layer.

    Returns (accuracy, trace) where trace rows are
    (node, bucket, exit_layer, predicted, true).
    """
    idx = np.flatnonzero(test_mask)
    pred = predictions(cube)
    trace = []
    hits = 0
    for v in idx:
        b = int(policy.assignment.bucket_of[v])
        layer = int(policy.exit_layer[b])
        p = int(pred[v, layer])
        y = int(labels[v])
        hits += p == y
        trace.append((int(v), b, layer, p, y))
    acc = hits / idx.size if idx.size else 0.0
    return float(acc), trace


# -- policy file I/O ----------------------------------------------------------

_POLICY_MAGIC = "exitgnn-policy v1"


def save_policy(policy: ExitPolicy, path):
    lines = [
        _POLICY_MAGIC,
        f"metric={policy.metric}",
        f"clusters={policy.n_buckets}",
        "boundaries=" + ",".join(str(int(b)) for b in policy.assignment.boundaries),
        "exit_layers=" + ",".join(str(int(l)) for l in policy.exit_layer),
        "",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))


def load_policy(path, bucket_of: np.ndarray) -> ExitPolicy:
    """Read a policy file back; needs the node->bucket map it was built over."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _POLICY_MAGIC:
        raise ValueError(f"not a policy file: {path}")
    fields = dict(line.split("=", 1) for line in lines[1:] if line)
    boundaries = np.array(
        [int(x) for x in fields["boundaries"].split(",") if x], dtype=np.int64
    )
    exit_layer = np.array([int(x) for x in fields["exit_layers"].split(",")],
                          dtype=np.int64)
    assignment = BucketAssignment(
        n_buckets=int(fields["clusters"]), boundaries=boundaries,
        bucket_of=bucket_of,
    )
    return ExitPolicy(metric=fields["metric"], n_buckets=int(fields["clusters"]),
                      assignment=assignment, exit_layer=exit_layer)
