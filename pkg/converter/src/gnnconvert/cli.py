"""One-shot dataset conversion into the exitgnn binary container.

    gnnconvert --dataset cora --src /path/to/planetoid --out data/cora
    gnnconvert --dataset cs --src ms_academic_cs.npz --out data/cs --split-seed 0
    gnnconvert --dataset ogbn-arxiv --src /path/to/arxiv --out data/arxiv

Planetoid datasets use their published splits; the others take
``--split-frac``/``--split-seed``. Edges are symmetrized and deduplicated,
self-loops dropped; the manifest notes record the raw counts so differing
published conventions stay traceable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .container import (
    ConversionError,
    canonical_pairs,
    stratified_split,
    write_container,
)
from .npz_graph import load_npz_graph
from .ogb import load_ogb_arxiv
from .planetoid import load_planetoid

PLANETOID = ("cora", "citeseer", "pubmed")
DATASETS = PLANETOID + ("cs", "ogbn-arxiv")


def convert(dataset: str, src, out_dir, split_frac=(0.5, 0.25, 0.25),
            split_seed: int = 0) -> Path:
    if dataset in PLANETOID:
        parsed = load_planetoid(src, dataset)
    elif dataset == "cs":
        parsed = load_npz_graph(src)
    elif dataset == "ogbn-arxiv":
        parsed = load_ogb_arxiv(src)
    else:
        raise ConversionError(f"unknown dataset {dataset!r}")

    n = parsed["features"].shape[0]
    pairs, counts = canonical_pairs(parsed["edges"], n)
    if "masks" in parsed:
        masks = parsed["masks"]
        split_note = "splits=provided"
    else:
        masks = stratified_split(parsed["labels"], split_frac, split_seed)
        fr = ",".join(f"{f:g}" for f in split_frac)
        split_note = f"splits=random frac={fr} seed={split_seed}"
    notes = [
        f"source={dataset}",
        split_note,
        "edges=symmetrized-deduplicated "
        + " ".join(f"{k}={v}" for k, v in counts.items()),
    ]
    return write_container(out_dir, dataset, parsed["features"], pairs,
                           parsed["labels"], masks, notes=notes)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gnnconvert", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dataset", required=True, choices=DATASETS)
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--src",
                     help="source directory (planetoid, ogbn-arxiv) or "
                          ".npz file (cs)")
    src.add_argument("--url",
                     help="base URL to fetch the source files from instead")
    parser.add_argument("--cache", default="sources",
                        help="download directory used with --url")
    parser.add_argument("--out", required=True, help="container directory")
    parser.add_argument("--split-seed", type=int, default=0)
    parser.add_argument("--split-frac", default="0.5,0.25,0.25",
                        help="train,val,test fractions for sources without "
                             "provided splits")
    args = parser.parse_args(argv)
    try:
        fracs = tuple(float(f) for f in args.split_frac.split(","))
        if len(fracs) != 3:
            raise ConversionError("--split-frac needs three numbers")
        source = args.src
        if args.url:
            from .fetch import fetch_source

            source = fetch_source(args.dataset, args.url,
                                  Path(args.cache) / args.dataset)
        manifest = convert(args.dataset, source, args.out,
                           split_frac=fracs, split_seed=args.split_seed)
    except ConversionError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {manifest}")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
