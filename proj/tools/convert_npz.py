#!/usr/bin/env python3
# Copyright 2026 The AuditVotes Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Convert a graph .npz (CSR adjacency, CSR attributes, labels) to TSV files.

The input uses the keys adj_data/adj_indices/adj_indptr/adj_shape,
attr_data/attr_indices/attr_indptr/attr_shape and labels, as in the
citeseer.npz / cora_ml.npz files shipped with common graph robustness code.
Writes edges.tsv, features.tsv and labels.tsv into the output directory.
"""

import argparse
import pathlib
import sys

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


def load(path):
    with np.load(path, allow_pickle=True) as f:
        keys = set(f.files)
        if "adj_data" not in keys:
            sys.exit(f"{path}: expected CSR keys adj_data/adj_indices/adj_indptr/adj_shape")
        adj = sp.csr_matrix((f["adj_data"], f["adj_indices"], f["adj_indptr"]), shape=f["adj_shape"])
        if "attr_data" in keys:
            x = sp.csr_matrix((f["attr_data"], f["attr_indices"], f["attr_indptr"]),
                              shape=f["attr_shape"])
        elif "attr_matrix" in keys:
            x = sp.csr_matrix(f["attr_matrix"])
        else:
            sys.exit(f"{path}: no node attributes")
        labels = np.asarray(f["labels"]).astype(np.int64)
    return adj, x, labels


def largest_component(adj):
    _, comp = connected_components(adj, directed=False)
    keep = np.flatnonzero(comp == np.bincount(comp).argmax())
    return keep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("npz")
    ap.add_argument("out_dir")
    ap.add_argument("--lcc", action="store_true", help="keep only the largest connected component")
    args = ap.parse_args()

    adj, x, labels = load(args.npz)
    adj = ((adj + adj.T) > 0).astype(np.int8)
    adj.setdiag(0)
    adj.eliminate_zeros()
    if args.lcc:
        keep = largest_component(adj)
        adj, x, labels = adj[keep][:, keep], x[keep], labels[keep]
    # Dense class ids after any node removal.
    _, labels = np.unique(labels, return_inverse=True)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    upper = sp.triu(adj, k=1).tocoo()
    np.savetxt(out / "edges.tsv", np.column_stack([upper.row, upper.col]), fmt="%d", delimiter="\t")
    x = x.tocoo()
    with open(out / "features.tsv", "w") as f:
        f.write(f"{x.shape[0]}\t{x.shape[1]}\n")
        order = np.lexsort((x.col, x.row))
        for r, c, v in zip(x.row[order], x.col[order], x.data[order]):
            f.write(f"{r}\t{c}\t{v:.17g}\n")
    np.savetxt(out / "labels.tsv", np.column_stack([np.arange(len(labels)), labels]), fmt="%d",
               delimiter="\t")
    print(f"{adj.shape[0]} nodes, {upper.nnz} edges, {x.shape[1]} features, "
          f"{labels.max() + 1} classes -> {out}")


if __name__ == "__main__":
    main()
