"""Quadtree sparse matrix representation.

A matrix is stored as a tree whose nodes are either identically zero,
a dense ``leaf_size x leaf_size`` block, or four quadrants::

    X = | X[0] X[1] |
        | X[2] X[3] |

Children are kept in row-major quadrant order ``(r, c) -> 2 * r + c``.
Every node caches the Frobenius norm of the entries below it, which is what
the approximate multiplication and the error bounds read at every level.

Matrices are immutable; every operation returns a new matrix and shares
untouched subtrees with its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "ZERO",
    "Zero",
    "Leaf",
    "Inner",
    "Node",
    "QuadTreeMatrix",
    "DEFAULT_LEAF_SIZE",
    "make_leaf",
    "make_inner",
    "add_nodes",
    "from_dense",
    "from_coordinates",
    "identity",
    "zeros",
    "add",
    "subtract",
    "scale",
    "frobenius_norm",
    "trace",
    "to_dense",
    "nnz",
    "nnz_blocks",
]

DEFAULT_LEAF_SIZE = 32


class Zero:
    """Identically zero subtree. Use the :data:`ZERO` singleton."""

    __slots__ = ()
    norm = 0.0

    def __repr__(self) -> str:
        return "ZERO"

    def __reduce__(self):
        return "ZERO"


ZERO = Zero()


class Leaf:
    __slots__ = ("block", "norm")

    def __init__(self, block: np.ndarray, norm: float):
        self.block = block
        self.norm = norm

    def __repr__(self) -> str:
        return f"Leaf(shape={self.block.shape}, norm={self.norm:.3e})"


class Inner:
    __slots__ = ("children", "norm")

    def __init__(self, children: tuple, norm: float):
        self.children = children
        self.norm = norm

    def __repr__(self) -> str:
        return f"Inner(norm={self.norm:.3e})"


Node = Zero | Leaf | Inner


def make_leaf(block: np.ndarray) -> Node:
    """Wrap a dense block, collapsing it to ``ZERO`` if every entry is zero."""
    if not block.any():
        return ZERO
    block = np.array(block, dtype=np.float64, order="F")
    block.flags.writeable = False
    return Leaf(block, math.sqrt(float(np.vdot(block, block))))


def make_inner(children: Sequence[Node]) -> Node:
    """Join four quadrants; four zero quadrants collapse to ``ZERO``."""
    if all(c is ZERO for c in children):
        return ZERO
    norm = math.sqrt(sum(c.norm * c.norm for c in children))
    return Inner(tuple(children), norm)


def add_nodes(a: Node, b: Node) -> Node:
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    if isinstance(a, Leaf):
        return make_leaf(a.block + b.block)
    return make_inner([add_nodes(x, y) for x, y in zip(a.children, b.children)])


def _scale_node(a: Node, alpha: float) -> Node:
    if a is ZERO:
        return ZERO
    if isinstance(a, Leaf):
        return make_leaf(alpha * a.block)
    return make_inner([_scale_node(c, alpha) for c in a.children])


def _padded_dimension(dimension: int, leaf_size: int) -> int:
    padded = leaf_size
    while padded < dimension:
        padded *= 2
    return padded


@dataclass(frozen=True)
class QuadTreeMatrix:
    """Square matrix of logical size ``dimension`` stored as a quadtree.

    The tree covers ``padded_dimension = leaf_size * 2**depth`` rows and
    columns; entries outside ``dimension`` are implicit zeros.
    """

    dimension: int
    leaf_size: int
    root: Node

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if self.leaf_size <= 0:
            raise ValueError("leaf_size must be positive")

    @property
    def padded_dimension(self) -> int:
        return _padded_dimension(self.dimension, self.leaf_size)

    @property
    def depth(self) -> int:
        """Number of inner levels above the leaves."""
        return (self.padded_dimension // self.leaf_size).bit_length() - 1

    @property
    def norm(self) -> float:
        return self.root.norm

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dimension, self.dimension)

    def with_root(self, root: Node) -> QuadTreeMatrix:
        return QuadTreeMatrix(self.dimension, self.leaf_size, root)

    def leaves(self) -> Iterator[tuple[int, int, Leaf]]:
        """Yield ``(block_row, block_col, leaf)`` for every stored leaf."""
        yield from _iter_leaves(self.root, 0, 0, self.padded_dimension // self.leaf_size)

    def __add__(self, other: QuadTreeMatrix) -> QuadTreeMatrix:
        return add(self, other)

    def __sub__(self, other: QuadTreeMatrix) -> QuadTreeMatrix:
        return subtract(self, other)

    def __neg__(self) -> QuadTreeMatrix:
        return scale(self, -1.0)

    def __rmul__(self, alpha: float) -> QuadTreeMatrix:
        return scale(self, alpha)


def _iter_leaves(node: Node, row: int, col: int, span: int):
    if node is ZERO:
        return
    if isinstance(node, Leaf):
        yield row, col, node
        return
    half = span // 2
    for q, child in enumerate(node.children):
        yield from _iter_leaves(child, row + (q >> 1) * half, col + (q & 1) * half, half)


def _check_compatible(a: QuadTreeMatrix, b: QuadTreeMatrix) -> None:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    if a.leaf_size != b.leaf_size:
        raise ValueError(f"leaf_size mismatch: {a.leaf_size} vs {b.leaf_size}")


def zeros(dimension: int, leaf_size: int = DEFAULT_LEAF_SIZE) -> QuadTreeMatrix:
    return QuadTreeMatrix(dimension, leaf_size, ZERO)


def from_dense(array, leaf_size: int = DEFAULT_LEAF_SIZE) -> QuadTreeMatrix:
    """Build a quadtree from a square dense array."""
    array = np.asarray(array, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ValueError(f"expected a square 2-D array, got shape {array.shape}")
    n = array.shape[0]
    padded = _padded_dimension(n, leaf_size)
    if padded != n:
        full = np.zeros((padded, padded))
        full[:n, :n] = array
        array = full

    def build(r0: int, c0: int, span: int) -> Node:
        if span == leaf_size:
            return make_leaf(array[r0:r0 + span, c0:c0 + span])
        if r0 >= n or c0 >= n:
            return ZERO
        half = span // 2
        return make_inner([
            build(r0, c0, half),
            build(r0, c0 + half, half),
            build(r0 + half, c0, half),
            build(r0 + half, c0 + half, half),
        ])

    return QuadTreeMatrix(n, leaf_size, build(0, 0, padded))


def from_coordinates(
    entries: Iterable[tuple[int, int, float]],
    dimension: int,
    leaf_size: int = DEFAULT_LEAF_SIZE,
) -> QuadTreeMatrix:
    """Build a quadtree from ``(row, col, value)`` triplets (0-based).

    Only the leaf blocks touched by an entry are ever allocated.
    """
    if dimension <= 0:
        raise ValueError("dimension must be positive")
    buckets: dict[tuple[int, int], list[tuple[int, int, float]]] = {}
    seen = set()
    for row, col, value in entries:
        row, col = int(row), int(col)
        if not (0 <= row < dimension and 0 <= col < dimension):
            raise IndexError(f"entry ({row}, {col}) outside a {dimension}x{dimension} matrix")
        if (row, col) in seen:
            raise ValueError(f"duplicate entry at ({row}, {col})")
        seen.add((row, col))
        buckets.setdefault((row // leaf_size, col // leaf_size), []).append(
            (row % leaf_size, col % leaf_size, float(value))
        )

    padded = _padded_dimension(dimension, leaf_size)

    def build(br: int, bc: int, span: int) -> Node:
        if span == 1:
            items = buckets.get((br, bc))
            if not items:
                return ZERO
            block = np.zeros((leaf_size, leaf_size), order="F")
            for r, c, v in items:
                block[r, c] = v
            return make_leaf(block)
        half = span // 2
        return make_inner([
            build(br, bc, half),
            build(br, bc + half, half),
            build(br + half, bc, half),
            build(br + half, bc + half, half),
        ])

    return QuadTreeMatrix(dimension, leaf_size, build(0, 0, padded // leaf_size))


def identity(dimension: int, leaf_size: int = DEFAULT_LEAF_SIZE) -> QuadTreeMatrix:
    return from_coordinates(((i, i, 1.0) for i in range(dimension)), dimension, leaf_size)


def frobenius_norm(x: QuadTreeMatrix) -> float:
    return x.root.norm


def add(a: QuadTreeMatrix, b: QuadTreeMatrix) -> QuadTreeMatrix:
    _check_compatible(a, b)
    return a.with_root(add_nodes(a.root, b.root))


def scale(x: QuadTreeMatrix, alpha: float) -> QuadTreeMatrix:
    alpha = float(alpha)
    if alpha == 0.0:
        return x.with_root(ZERO)
    return x.with_root(_scale_node(x.root, alpha))


def subtract(a: QuadTreeMatrix, b: QuadTreeMatrix) -> QuadTreeMatrix:
    return add(a, scale(b, -1.0))


def trace(x: QuadTreeMatrix) -> float:
    def walk(node: Node) -> float:
        if node is ZERO:
            return 0.0
        if isinstance(node, Leaf):
            return float(np.trace(node.block))
        return walk(node.children[0]) + walk(node.children[3])

    return walk(x.root)


def to_dense(x: QuadTreeMatrix) -> np.ndarray:
    padded = x.padded_dimension
    out = np.zeros((padded, padded))
    ls = x.leaf_size
    for br, bc, leaf in x.leaves():
        out[br * ls:(br + 1) * ls, bc * ls:(bc + 1) * ls] = leaf.block
    return out[:x.dimension, :x.dimension].copy()


def nnz(x: QuadTreeMatrix) -> int:
    """Number of stored entries that are exactly nonzero."""
    return sum(int(np.count_nonzero(leaf.block)) for _, _, leaf in x.leaves())


def nnz_blocks(x: QuadTreeMatrix) -> int:
    """Number of non-zero leaf blocks."""
    return sum(1 for _ in x.leaves())
