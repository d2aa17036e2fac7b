"""MatrixMarket coordinate files for quadtree matrices."""

from __future__ import annotations

import os

import numpy as np
import scipy.io
import scipy.sparse

from .quadtree import DEFAULT_LEAF_SIZE, QuadTreeMatrix, from_coordinates

__all__ = ["read_matrix_market", "write_matrix_market"]


def read_matrix_market(path: str | os.PathLike, leaf_size: int = DEFAULT_LEAF_SIZE) -> QuadTreeMatrix:
    """Read a square real coordinate MatrixMarket file (1-based indices)."""
    m = scipy.io.mmread(os.fspath(path))
    if not scipy.sparse.issparse(m):
        raise ValueError(f"{path}: expected coordinate format, found a dense array")
    m = scipy.sparse.coo_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{path}: matrix is not square {m.shape}")
    if np.iscomplexobj(m.data):
        raise ValueError(f"{path}: complex matrices are not supported")
    m.sum_duplicates()
    return from_coordinates(zip(m.row, m.col, m.data.astype(np.float64)), m.shape[0], leaf_size)


def write_matrix_market(path: str | os.PathLike, x: QuadTreeMatrix) -> None:
    """Write the nonzero entries as ``coordinate real general``."""
    rows, cols, vals = [], [], []
    ls = x.leaf_size
    for br, bc, leaf in x.leaves():
        r, c = np.nonzero(leaf.block)
        rows.append(r + br * ls)
        cols.append(c + bc * ls)
        vals.append(leaf.block[r, c])
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        rows = cols = np.zeros(0, dtype=np.intp)
        vals = np.zeros(0)
    order = np.lexsort((rows, cols))
    m = scipy.sparse.coo_matrix((vals[order], (rows[order], cols[order])), shape=x.shape)
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, m, precision=17, symmetry="general")
