"""Frobenius-norm error control for approximate multiplication.

:func:`cse` walks the same recursion as :func:`~spamm_ec.multiply.spamm`
once and returns, for a whole vector of candidate tolerances, an upper
bound on ``||spamm(A, B, tau) - A B||_F``. A skipped leaf-pair product
``A_ik B_kj`` is charged ``||A_ik||_F ||B_kj||_F``; contributions to one
output block add linearly (triangle inequality) and the four output blocks
of a node combine in quadrature.

:func:`select_tolerance` then picks the largest candidate whose bound is
below the requested error, and :func:`truncate` removes whole leaf blocks
from a matrix while keeping the removed norm below a budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .multiply import spamm
from .quadtree import ZERO, Leaf, Node, QuadTreeMatrix, make_inner

__all__ = [
    "ToleranceGrid",
    "TruncationResult",
    "ControlledProduct",
    "cse",
    "select_tolerance",
    "truncate",
    "spamm_with_error_control",
]


@dataclass(frozen=True)
class ToleranceGrid:
    """Strictly decreasing vector of positive candidate SpAMM tolerances."""

    taus: np.ndarray = field(repr=False)

    def __post_init__(self):
        taus = np.array(self.taus, dtype=np.float64).ravel()
        if taus.size == 0:
            raise ValueError("tolerance grid must not be empty")
        if not np.all(taus > 0) or not np.all(np.isfinite(taus)):
            raise ValueError("tolerances must be positive and finite")
        if np.any(np.diff(taus) >= 0):
            raise ValueError("tolerances must be strictly decreasing")
        taus.flags.writeable = False
        object.__setattr__(self, "taus", taus)

    @classmethod
    def geometric(cls, start: float = 1.0, ratio: float = 0.9, count: int = 350) -> ToleranceGrid:
        """``tau_1 = start``, ``tau_k = ratio * tau_{k-1}``, ``count`` values."""
        if not 0.0 < ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if count < 1:
            raise ValueError("count must be positive")
        taus = np.empty(count)
        taus[0] = start
        for k in range(1, count):
            taus[k] = ratio * taus[k - 1]
        return cls(taus)

    def __len__(self) -> int:
        return self.taus.size

    def __repr__(self) -> str:
        return f"ToleranceGrid(n={len(self)}, first={self.taus[0]:.3g}, last={self.taus[-1]:.3g})"


def _as_grid(grid) -> ToleranceGrid:
    if grid is None:
        return ToleranceGrid.geometric()
    if isinstance(grid, ToleranceGrid):
        return grid
    return ToleranceGrid(grid)


def _cse_node(a: Node, b: Node, taus: np.ndarray) -> np.ndarray:
    if a is ZERO or b is ZERO:
        return np.zeros(taus.size)
    p = a.norm * b.norm
    if p == 0.0:
        return np.zeros(taus.size)
    if isinstance(a, Leaf):
        return np.where(p < taus, p, 0.0)
    ac, bc = a.children, b.children
    errors = np.zeros(taus.size)
    for i in (0, 1):
        for j in (0, 1):
            e = _cse_node(ac[2 * i], bc[j], taus) + _cse_node(ac[2 * i + 1], bc[2 + j], taus)
            errors = errors + e * e
    return np.sqrt(errors)


def cse(a: QuadTreeMatrix, b: QuadTreeMatrix, grid=None) -> np.ndarray:
    """Upper bounds on the SpAMM product error for every tolerance in ``grid``.

    Returns an array aligned with ``grid.taus``; entry ``k`` bounds
    ``||spamm(a, b, taus[k]) - a @ b||_F``.
    """
    if a.dimension != b.dimension or a.leaf_size != b.leaf_size:
        raise ValueError("operands are not conformable")
    grid = _as_grid(grid)
    return _cse_node(a.root, b.root, grid.taus)


def select_tolerance(bounds, grid, delta: float) -> float:
    """Largest tolerance whose error bound is strictly below ``delta``.

    Falls back to ``0.0`` (exact multiplication) when no candidate qualifies.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    grid = _as_grid(grid)
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.shape != grid.taus.shape:
        raise ValueError("bounds and grid differ in length")
    ok = np.flatnonzero(bounds < delta)
    if ok.size == 0:
        return 0.0
    return float(grid.taus[ok[0]])


@dataclass(frozen=True)
class TruncationResult:
    matrix: QuadTreeMatrix
    removed_norm_bound: float
    removed_block_count: int


def truncate(x: QuadTreeMatrix, delta: float) -> TruncationResult:
    """Drop the smallest leaf blocks while their combined norm stays below ``delta``.

    Leaves are visited in ascending norm order (ties broken by block row,
    then block column) and removed as long as the square root of the
    accumulated squared norms is strictly less than ``delta``.
    """
    if not delta >= 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    leaves = sorted(((leaf.norm, br, bc) for br, bc, leaf in x.leaves()))
    removed = set()
    acc = 0.0
    for norm, br, bc in leaves:
        trial = acc + norm * norm
        if not math.sqrt(trial) < delta:
            break
        acc = trial
        removed.add((br, bc))
    if not removed:
        return TruncationResult(x, 0.0, 0)

    def prune(node: Node, row: int, col: int, span: int) -> Node:
        if node is ZERO:
            return ZERO
        if isinstance(node, Leaf):
            return ZERO if (row, col) in removed else node
        half = span // 2
        return make_inner([
            prune(child, row + (q >> 1) * half, col + (q & 1) * half, half)
            for q, child in enumerate(node.children)
        ])

    root = prune(x.root, 0, 0, x.padded_dimension // x.leaf_size)
    return TruncationResult(x.with_root(root), math.sqrt(acc), len(removed))


class ControlledProduct(NamedTuple):
    matrix: QuadTreeMatrix
    tau: float
    bound: float


def spamm_with_error_control(
    a: QuadTreeMatrix,
    b: QuadTreeMatrix,
    delta: float,
    grid=None,
    *,
    timings: dict | None = None,
    workers: int = 1,
) -> ControlledProduct:
    """Approximate ``a @ b`` with ``||result - a @ b||_F < delta``.

    Runs :func:`cse` over ``grid``, picks the tolerance with
    :func:`select_tolerance` and multiplies with :func:`spamm`. If
    ``timings`` is given, the wall time of the two phases is added under
    the keys ``"cse"`` and ``"spamm"``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    grid = _as_grid(grid)
    t0 = time.perf_counter()
    bounds = cse(a, b, grid)
    tau = select_tolerance(bounds, grid, delta)
    t1 = time.perf_counter()
    c = spamm(a, b, tau, workers=workers)
    t2 = time.perf_counter()
    if timings is not None:
        timings["cse"] = timings.get("cse", 0.0) + (t1 - t0)
        timings["spamm"] = timings.get("spamm", 0.0) + (t2 - t1)
    if tau == 0.0:
        bound = 0.0
    else:
        bound = float(bounds[np.flatnonzero(grid.taus == tau)[0]])
    return ControlledProduct(c, tau, bound)
