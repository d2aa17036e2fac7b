"""Exact and approximate (SpAMM) quadtree multiplication.

Both products share one recursion. At every node pair the product of the
cached Frobenius norms is compared against the tolerance ``tau`` with a
strict ``<``; a pair that falls below is dropped without descending further.
With ``tau = 0`` nothing can be dropped, so the exact product is simply
``spamm(a, b, 0.0)`` and the two are bitwise identical.

Summation order is fixed: ``C[i, j] = A[i, 0] B[0, j] + A[i, 1] B[1, j]``
at inner levels, and ascending ``k`` inside the leaf kernel. Quadrant
products may run on worker threads; results are joined in the same order,
so the output does not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np

from .quadtree import ZERO, Leaf, Node, QuadTreeMatrix, add_nodes, make_inner, make_leaf

__all__ = ["leaf_product", "multiply_exact", "spamm", "square"]


@numba.njit(nogil=True, cache=True)
def _gemm_ikj(a, b):
    n, m = a.shape
    p = b.shape[1]
    c = np.zeros((n, p))
    for i in range(n):
        for k in range(m):
            aik = a[i, k]
            if aik != 0.0:
                for j in range(p):
                    c[i, j] += aik * b[k, j]
    return c


def leaf_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense block product with row-major, ascending-``k`` accumulation."""
    return _gemm_ikj(np.ascontiguousarray(a), np.ascontiguousarray(b))


def _spamm_node(a: Node, b: Node, tau: float) -> Node:
    if a is ZERO or b is ZERO:
        return ZERO
    if a.norm * b.norm < tau:
        return ZERO
    if isinstance(a, Leaf):
        return make_leaf(leaf_product(a.block, b.block))
    ac, bc = a.children, b.children
    return make_inner([
        add_nodes(_spamm_node(ac[2 * i], bc[j], tau), _spamm_node(ac[2 * i + 1], bc[2 + j], tau))
        for i in (0, 1)
        for j in (0, 1)
    ])


def _spamm_root_parallel(a: Node, b: Node, tau: float, workers: int) -> Node:
    # Only the eight top-level quadrant products are farmed out.
    if a is ZERO or b is ZERO or a.norm * b.norm < tau or isinstance(a, Leaf):
        return _spamm_node(a, b, tau)
    ac, bc = a.children, b.children
    pairs = [(ac[2 * i + k], bc[2 * k + j]) for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ab: _spamm_node(ab[0], ab[1], tau), pairs))
    return make_inner([add_nodes(parts[2 * q], parts[2 * q + 1]) for q in range(4)])


def _check(a: QuadTreeMatrix, b: QuadTreeMatrix) -> None:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    if a.leaf_size != b.leaf_size:
        raise ValueError(f"leaf_size mismatch: {a.leaf_size} vs {b.leaf_size}")


def spamm(a: QuadTreeMatrix, b: QuadTreeMatrix, tau: float, *, workers: int = 1) -> QuadTreeMatrix:
    """Sparse approximate product of ``a`` and ``b``.

    Parameters
    ----------
    a, b : QuadTreeMatrix
        Conformable operands with equal ``leaf_size``.
    tau : float
        Skip tolerance, ``tau >= 0``. Any pair of subtrees whose norm
        product is strictly below ``tau`` contributes nothing.
    workers : int
        Threads used for the top-level quadrant products.
    """
    _check(a, b)
    tau = float(tau)
    if not tau >= 0.0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if workers > 1:
        root = _spamm_root_parallel(a.root, b.root, tau, workers)
    else:
        root = _spamm_node(a.root, b.root, tau)
    return a.with_root(root)


def multiply_exact(a: QuadTreeMatrix, b: QuadTreeMatrix, *, workers: int = 1) -> QuadTreeMatrix:
    """Exact product; zero branches are still skipped."""
    return spamm(a, b, 0.0, workers=workers)


def square(x: QuadTreeMatrix, tau: float = 0.0, *, workers: int = 1) -> QuadTreeMatrix:
    return spamm(x, x, tau, workers=workers)
