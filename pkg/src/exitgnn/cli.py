"""Operator command line: train, policy, centrality, synth, sweep.

Every subcommand is deterministic for a fixed seed: CSV and checkpoint bytes
are identical across repeated invocations. Exit codes: 0 success, 1 usage
error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .centrality import (
    ConvergenceError,
    Metric,
    bucketize,
    compute,
)
from .dataset_io import DatasetError, load_dataset, load_regions, save_dataset
from .graph import GraphValidationError, normalize
from .model import ADJ_FOR_FLAVOR, Flavor, ModelParams, NonFiniteError, forward
from .model import load_checkpoint, save_checkpoint
from .policy import (
    apply_policy,
    learn_policy,
    oracle_accuracy,
    per_layer_accuracy,
    save_policy,
)
from .sweep import depth_sweep
from .synthetic import (
    SynthesisError,
    SyntheticSpec,
    core_split_synthetic,
    planted_two_block,
)
from .train import DivergenceError, TrainConfig, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


METRIC_NAMES = {m.value: m for m in Metric}


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            _fmt(v) if isinstance(v, float) else str(v) for v in row
        ))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="ascii")


def _render_table(header, rows) -> str:
    cells = [header] + [
        [_fmt(v) if isinstance(v, float) else str(v) for v in row]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _parse_seeds(spec: str) -> list[int]:
    """'10' means ten seeds 0..9; '3,5,7' means exactly those seeds."""
    try:
        if "," in spec:
            return [int(s) for s in spec.split(",") if s]
        return list(range(int(spec)))
    except ValueError:
        raise UsageError(f"bad --seeds value {spec!r}") from None


def _parse_clusters(spec: str) -> list[int]:
    try:
        return [int(s) for s in spec.split(",") if s]
    except ValueError:
        raise UsageError(f"bad --clusters value {spec!r}") from None


def _default_out() -> str:
    return os.environ.get("EXITGNN_OUTDIR", "runs")


def _load_config_file(path) -> dict:
    fields = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    return fields


_FLOAT_KEYS = {"lr", "dropout", "weight_decay"}
_INT_KEYS = {"epochs", "hidden", "patience", "layers", "seed"}


def _merge_train_config(args) -> tuple[TrainConfig, Flavor, int]:
    """Flags override config-file entries, which override defaults."""
    file_cfg = _load_config_file(args.config) if args.config else {}

    def pick(name, flag_value, default):
        if flag_value is not None:
            return flag_value
        if name in file_cfg:
            raw = file_cfg[name]
            if name in _FLOAT_KEYS:
                return float(raw)
            if name in _INT_KEYS:
                return int(raw)
            return raw
        return default

    try:
        cfg = TrainConfig(
            paradigm=pick("paradigm", args.paradigm, "st"),
            epochs=pick("epochs", args.epochs, 200),
            lr=pick("lr", args.lr, 0.01),
            dropout=pick("dropout", args.dropout, 0.5),
            hidden=pick("hidden", args.hidden, 64),
            weight_decay=pick("weight_decay", args.weight_decay, 0.0),
            seed=0,
            patience=pick("patience", args.patience, 50),
        )
        flavor = Flavor(pick("flavor", args.flavor, "gcn"))
        layers = int(pick("layers", args.layers, 5))
    except ValueError as err:
        raise UsageError(str(err)) from None
    return cfg, flavor, layers


def build_parser() -> _Parser:
    p = _Parser(prog="exitgnn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True,
                          parser_class=_Parser)

    t = sub.add_parser("train",
                       help="train a multi-exit stack over one or more seeds")
    t.add_argument("--dataset", required=True, help="dataset directory")
    t.add_argument("--paradigm", choices=["alm", "st"],
                   help="joint summed-loss (alm) or stage-wise freezing (st); "
                        "default st")
    t.add_argument("--flavor", choices=["gcn", "gin"],
                   help="aggregation flavor; default gcn")
    t.add_argument("--layers", type=int, help="maximum depth; default 5")
    t.add_argument("--hidden", type=int, help="hidden width; default 64")
    t.add_argument("--lr", type=float, help="learning rate; default 0.01")
    t.add_argument("--dropout", type=float,
                   help="drop probability; default 0.5")
    t.add_argument("--weight-decay", dest="weight_decay", type=float,
                   help="L2 coefficient; default 0")
    t.add_argument("--epochs", type=int,
                   help="budget per stage (st) or total (alm); default 200")
    t.add_argument("--patience", type=int,
                   help="early-stop patience in epochs; default 50")
    t.add_argument("--seeds", default="1",
                   help="count N (seeds 0..N-1) or explicit list 'a,b,c'")
    t.add_argument("--config", help="key=value file mirroring the train config")
    t.add_argument("--out", default=None)

    pol = sub.add_parser("policy",
                         help="learn and apply centrality exit policies")
    pol.add_argument("--dataset", required=True)
    pol.add_argument("--run-dir", required=True,
                     help="train output directory with seed_*/checkpoint.bin")
    pol.add_argument("--metric", default="all",
                     choices=sorted(METRIC_NAMES) + ["all"])
    pol.add_argument("--clusters", default="5",
                     help="bucket count, or a list 'a,b,c' tuned on validation")
    pol.add_argument("--out", default=None)

    c = sub.add_parser("centrality",
                       help="emit per-node centrality values as CSV")
    c.add_argument("--dataset", required=True)
    c.add_argument("--metric", required=True, choices=sorted(METRIC_NAMES))
    c.add_argument("--out", default=None, help="CSV path (default stdout)")

    s = sub.add_parser("synth",
                       help="build a sparse/dense synthetic graph container")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--source", help="source dataset directory (core split)")
    src.add_argument("--planted", action="store_true",
                     help="plant a two-block graph without external data")
    s.add_argument("--n", type=int, default=5000, help="total nodes")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threshold", type=float, default=None,
                   help="core-number threshold (default: source median)")
    s.add_argument("--classes", type=int, default=4, help="planted classes")
    s.add_argument("--out", required=True)

    w = sub.add_parser("sweep",
                       help="per-depth per-region accuracy table")
    w.add_argument("--dataset", required=True,
                   help="synthetic dataset directory with regions.bin")
    w.add_argument("--max-depth", type=int, default=10)
    w.add_argument("--hidden", type=int, default=32)
    w.add_argument("--lr", type=float, default=0.01)
    w.add_argument("--dropout", type=float, default=0.3)
    w.add_argument("--epochs", type=int, default=150)
    w.add_argument("--patience", type=int, default=30)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", default=None, help="CSV path (default stdout)")
    return p


# -- subcommands --------------------------------------------------------------


def cmd_train(args) -> int:
    cfg, flavor, layers = _merge_train_config(args)
    g = load_dataset(args.dataset)
    adj = normalize(g, ADJ_FOR_FLAVOR[flavor])
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        raise UsageError("no seeds given")
    out_dir = Path(args.out if args.out is not None else _default_out())
    out_dir.mkdir(parents=True, exist_ok=True)

    per_seed_test = []
    for seed in seeds:
        run_cfg = TrainConfig(paradigm=cfg.paradigm, epochs=cfg.epochs,
                              lr=cfg.lr, dropout=cfg.dropout, hidden=cfg.hidden,
                              weight_decay=cfg.weight_decay, seed=seed,
                              patience=cfg.patience)
        params = ModelParams(flavor, layers, g.n_features, cfg.hidden,
                             g.n_classes, seed=seed)
        params, ledger = train(params, g, adj, run_cfg)
        seed_dir = out_dir / f"seed_{seed}"
        seed_dir.mkdir(exist_ok=True)
        save_checkpoint(params, seed_dir / "checkpoint.bin")
        _write_csv(seed_dir / "metrics.csv",
                   ["stage", "epoch", "layer", "split", "accuracy", "loss"],
                   ledger.rows)
        per_seed_test.append(ledger.final_test_accuracy)

    acc = np.array(per_seed_test)  # (n_seeds, layers+1)
    rows = [
        (layer, float(acc[:, layer].mean()), float(acc[:, layer].std()),
         len(seeds))
        for layer in range(layers + 1)
    ]
    header = ["layer", "mean_test_accuracy", "std", "n_seeds"]
    _write_csv(out_dir / "layer_accuracy.csv", header, rows)
    table = _render_table(header, rows)
    (out_dir / "layer_accuracy.txt").write_text(table, encoding="ascii")
    sys.stdout.write(table)
    return 0


def _tuned_policy(cube, labels, val_mask, cv, clusters):
    """Pick the cluster count by validation accuracy of the learned policy."""
    best = None
    for c in clusters:
        assignment = bucketize(cv, c)
        pol = learn_policy(cube, labels, val_mask, assignment, metric=cv.metric.value)
        val_acc, _ = apply_policy(cube, pol, val_mask, labels)
        if best is None or val_acc > best[0]:
            best = (val_acc, c, pol)
    return best[1], best[2]


def cmd_policy(args) -> int:
    g = load_dataset(args.dataset)
    run_dir = Path(args.run_dir)
    seed_dirs = sorted(run_dir.glob("seed_*"),
                       key=lambda p: int(p.name.split("_")[1]))
    if not seed_dirs:
        raise DatasetError(f"no seed_*/ checkpoints under {run_dir}")
    clusters = _parse_clusters(args.clusters)
    if not clusters:
        raise UsageError("--clusters needs at least one bucket count")
    if max(clusters) > g.n_nodes or min(clusters) < 1:
        raise UsageError(
            f"cluster counts must be in 1..{g.n_nodes}, got {clusters}"
        )
    metrics = sorted(METRIC_NAMES) if args.metric == "all" else [args.metric]
    out_dir = Path(args.out if args.out is not None else _default_out())
    out_dir.mkdir(parents=True, exist_ok=True)

    centrality_vectors = {m: compute(g, METRIC_NAMES[m]) for m in metrics}
    per_seed_rows = []
    oracle_by_seed = []
    acc_by_metric = {m: [] for m in metrics}
    for seed_dir in seed_dirs:
        seed = int(seed_dir.name.split("_")[1])
        params = load_checkpoint(seed_dir / "checkpoint.bin")
        if params.n_features != g.n_features or params.n_classes != g.n_classes:
            raise DatasetError(
                f"checkpoint {seed_dir} does not match the dataset"
            )
        adj = normalize(g, ADJ_FOR_FLAVOR[params.flavor])
        cube = forward(params, g, adj, "eval").probs
        oracle = oracle_accuracy(cube, g.labels, g.test_mask)
        # set containment: a node any layer gets right is a node the best
        # single layer gets right or better
        assert oracle >= per_layer_accuracy(cube, g.labels, g.test_mask).max()
        oracle_by_seed.append(oracle)
        for m in metrics:
            chosen_c, pol = _tuned_policy(cube, g.labels, g.val_mask,
                                          centrality_vectors[m], clusters)
            acc, trace = apply_policy(cube, pol, g.test_mask, g.labels)
            acc_by_metric[m].append(acc)
            per_seed_rows.append((seed, m, chosen_c, acc))
            save_policy(pol, seed_dir / f"policy_{m}.txt")
            _write_csv(seed_dir / f"trace_{m}.csv",
                       ["node", "bucket", "exit_layer", "predicted", "true"],
                       trace)

    n = len(seed_dirs)
    report = [
        (m, float(np.mean(acc_by_metric[m])), float(np.std(acc_by_metric[m])), n)
        for m in metrics
    ]
    report.append(("oracle", float(np.mean(oracle_by_seed)),
                   float(np.std(oracle_by_seed)), n))
    header = ["metric", "mean_test_accuracy", "std", "n_seeds"]
    _write_csv(out_dir / "policy_report.csv", header, report)
    _write_csv(out_dir / "policy_seeds.csv",
               ["seed", "metric", "clusters", "test_accuracy"], per_seed_rows)
    table = _render_table(header, report)
    (out_dir / "policy_report.txt").write_text(table, encoding="ascii")
    sys.stdout.write(table)
    return 0


def cmd_centrality(args) -> int:
    g = load_dataset(args.dataset)
    cv = compute(g, METRIC_NAMES[args.metric])
    rows = [(v, float(cv.values[v])) for v in range(g.n_nodes)]
    _write_csv(args.out, ["node_id", "value"], rows)
    return 0


def cmd_synth(args) -> int:
    if args.planted:
        if args.n % 2:
            raise UsageError("--n must be even")
        g, regions = planted_two_block(n_per_region=args.n // 2,
                                       n_classes=args.classes, seed=args.seed)
        name = "planted-two-block"
        notes = [f"generator=planted seed={args.seed}"]
    else:
        source = load_dataset(args.source)
        spec = SyntheticSpec(n_total=args.n, core_threshold=args.threshold,
                             seed=args.seed)
        g, regions = core_split_synthetic(source, spec)
        name = "core-split"
        notes = [f"generator=core-split source={Path(args.source).name} "
                 f"seed={args.seed}"]
    save_dataset(g, args.out, name=name, regions=regions, notes=notes)
    sys.stdout.write(
        f"wrote {g.n_nodes} nodes, {g.n_edges} edges, "
        f"{g.n_classes} classes to {args.out}\n"
    )
    return 0


def cmd_sweep(args) -> int:
    g = load_dataset(args.dataset)
    regions = load_regions(args.dataset)
    try:
        cfg = TrainConfig(paradigm="st", epochs=args.epochs, lr=args.lr,
                          dropout=args.dropout, hidden=args.hidden,
                          seed=args.seed, patience=args.patience)
    except ValueError as err:
        raise UsageError(str(err)) from None
    rows = depth_sweep(g, regions, args.max_depth, cfg)
    _write_csv(args.out, ["depth", "region", "split", "accuracy"], rows)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "policy": cmd_policy,
    "centrality": cmd_centrality,
    "synth": cmd_synth,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (DatasetError, GraphValidationError, SynthesisError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except (DivergenceError, NonFiniteError, ConvergenceError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
