#!/usr/bin/env python3
"""Convert the Planetoid citation datasets to the canonical dataset directory format.

Input is the directory of raw files distributed with the Planetoid/GCN
releases (``ind.<name>.x``, ``.y``, ``.tx``, ``.ty``, ``.allx``, ``.ally``,
``.graph``, ``.test.index``). The standard transductive split is kept:
train = the first ``len(y)`` nodes, val = the next 500, test = the nodes in
``test.index``. Citeseer's isolated test nodes without features are padded
with zero rows and written as unlabeled.

    python3 scripts/planetoid_to_canonical.py RAW_DIR cora data/cora
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

PARTS = ["x", "y", "tx", "ty", "allx", "ally", "graph"]


def load_raw(raw: Path, name: str):
    objects = []
    for part in PARTS:
        with open(raw / f"ind.{name}.{part}", "rb") as f:
            objects.append(pickle.load(f, encoding="latin1"))
    x, y, tx, ty, allx, ally, graph = objects
    test_idx_reorder = [int(line) for line in open(raw / f"ind.{name}.test.index")]
    test_idx_range = np.sort(test_idx_reorder)

    if name == "citeseer":
        full = range(min(test_idx_reorder), max(test_idx_reorder) + 1)
        tx_ext = sp.lil_matrix((len(full), x.shape[1]))
        tx_ext[test_idx_range - min(test_idx_range), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), y.shape[1]))
        ty_ext[test_idx_range - min(test_idx_range), :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_idx_reorder, :] = features[test_idx_range, :]
    labels = np.vstack((ally, ty))
    labels[test_idx_reorder, :] = labels[test_idx_range, :]

    splits = {
        "train": list(range(len(y))),
        "val": list(range(len(y), len(y) + 500)),
        "test": sorted(int(i) for i in test_idx_range),
    }
    return sp.csr_matrix(features), labels, graph, splits


def fmt(value: float) -> str:
    return np.format_float_positional(float(value), unique=True, trim="-")


def edge_list(graph, n: int):
    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u == v:
                continue
            if not (0 <= u < n and 0 <= v < n):
                sys.exit(f"edge ({u}, {v}) references a node outside 0..{n}")
            edges.add((min(u, v), max(u, v)))
    return sorted(edges)


def write(out: Path, name: str, features, labels, graph, splits):
    n, d = features.shape
    out.mkdir(parents=True, exist_ok=True)
    features.sort_indices()
    with open(out / "nodes.tsv", "w", newline="\n") as f:
        for i in range(n):
            row = labels[i]
            label = int(np.argmax(row)) if row.sum() > 0 else -1
            lo, hi = features.indptr[i], features.indptr[i + 1]
            feats = ",".join(
                f"{j}:{fmt(v)}" for j, v in zip(features.indices[lo:hi], features.data[lo:hi]) if v != 0
            )
            f.write(f"{i}\t{label}\t{feats}\n")
    edges = edge_list(graph, n)
    with open(out / "edges.tsv", "w", newline="\n") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
    with open(out / "splits.json", "w", newline="\n") as f:
        f.write(json.dumps(splits, separators=(",", ":")) + "\n")
    meta = {
        "num_nodes": n,
        "num_edges": len(edges),
        "feat_dim": d,
        "num_classes": labels.shape[1],
        "dataset_name": name,
    }
    with open(out / "meta.json", "w", newline="\n") as f:
        f.write(json.dumps(meta, indent=2) + "\n")
    print(f"{name}: {n} nodes, {len(edges)} edges, {d} features, {labels.shape[1]} classes, "
          f"splits {len(splits['train'])}/{len(splits['val'])}/{len(splits['test'])} -> {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("raw", type=Path, help="directory with the ind.<name>.* files")
    parser.add_argument("name", choices=["cora", "citeseer", "pubmed"])
    parser.add_argument("out", type=Path, help="canonical dataset directory to create")
    args = parser.parse_args()
    write(args.out, args.name, *load_raw(args.raw, args.name))


if __name__ == "__main__":
    main()
