"""Dense reference implementations and synthetic test matrices.

Nothing here touches the quadtree code paths; these routines exist to check
them. Dense matrices are plain ``numpy.ndarray`` objects of ``float64``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "ConvergenceError",
    "DecayModelSpec",
    "dense_multiply",
    "dense_frobenius",
    "jacobi_eigh",
    "density_matrix_oracle",
    "generate_decay_matrix",
    "gershgorin_bounds",
]


class ConvergenceError(RuntimeError):
    pass


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def dense_multiply(a, b) -> np.ndarray:
    """Textbook product, accumulated over ``k`` in ascending order."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    c = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        c += a[:, k:k + 1] * b[k]
    return c


def dense_frobenius(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    return math.sqrt(float(np.sum(a * a)))


@numba.njit(cache=True)
def _jacobi_sweeps(a, vt, tol, max_sweeps):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = math.sqrt(scale)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= tol * scale:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.hypot(1.0, theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[k, q] = s * akp + c * akq
                        a[p, k] = a[k, p]
                        a[q, k] = a[k, q]
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vp = vt[p, k]
                    vq = vt[q, k]
                    vt[p, k] = c * vp - s * vq
                    vt[q, k] = s * vp + c * vq
    return -1


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Pairs ``(p, q)`` are visited row by row in every sweep. Iteration stops
    once the off-diagonal Frobenius norm drops below ``tol * ||a||_F``.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Orthonormal eigenvectors, ``v[:, k]`` belonging to ``w[k]``.

    Raises
    ------
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the threshold.
    """
    a = _square(a)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(dense_frobenius(a), 1.0)):
        raise ValueError("matrix is not symmetric")
    a = np.ascontiguousarray(0.5 * (a + a.T))
    vt = np.eye(a.shape[0])
    if _jacobi_sweeps(a, vt, tol, max_sweeps) < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], vt.T[:, order].copy()


def density_matrix_oracle(f, occupation: int) -> np.ndarray:
    """Spectral projector onto the ``occupation`` lowest eigenvectors of ``f``.

    Equivalent to ``theta(mu I - F)`` with ``mu`` anywhere in the gap between
    the highest occupied and lowest unoccupied eigenvalue.
    """
    f = _square(f)
    n = f.shape[0]
    if not 0 < occupation <= n:
        raise ValueError(f"occupation must lie in (0, {n}], got {occupation}")
    _, v = jacobi_eigh(f)
    occ = v[:, :occupation]
    return occ @ occ.T


def gershgorin_bounds(a) -> tuple[float, float]:
    a = _square(a)
    off = np.abs(a)
    np.fill_diagonal(off, 0.0)
    radius = np.sum(off, axis=1)
    return float(np.min(np.diag(a) - radius)), float(np.max(np.diag(a) + radius))


@dataclass(frozen=True)
class DecayModelSpec:
    """Parameters of a synthetic symmetric matrix with exponential element decay.

    Off-diagonal entries are ``scale * exp(-alpha |i - j|) * u`` with ``u``
    uniform on ``[-1, 1]``; entries whose envelope falls below
    ``cutoff * scale`` are exactly zero. Orbitals come in groups of
    ``group_size``; the first ``occupied_per_group`` of each group get a low
    on-site energy and the rest a high one, which opens a gap above the
    ``occupation`` lowest eigenvalues. On-site energies are placed so every
    Gershgorin disc lies inside ``spectral_target``.
    """

    dimension: int
    alpha: float = 0.5
    scale: float = 0.1
    spectral_target: tuple[float, float] = (-1.0, 1.0)
    seed: int = 0
    group_size: int = 4
    occupied_per_group: int = 1
    cutoff: float = 1e-12

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if not 0 <= self.occupied_per_group <= self.group_size:
            raise ValueError("occupied_per_group must lie in [0, group_size]")

    @property
    def bandwidth(self) -> int:
        if math.isinf(self.alpha) or self.scale == 0 or self.cutoff >= 1:
            return 0
        return min(self.dimension - 1, int(math.floor(math.log(1.0 / self.cutoff) / self.alpha)))

    @property
    def low_sites(self) -> np.ndarray:
        return (np.arange(self.dimension) % self.group_size) < self.occupied_per_group

    @property
    def occupation(self) -> int:
        return int(np.count_nonzero(self.low_sites))


def generate_decay_matrix(spec: DecayModelSpec) -> np.ndarray:
    lo, hi = map(float, spec.spectral_target)
    if not lo < hi:
        raise ValueError(f"infeasible spectral target {spec.spectral_target}")
    n = spec.dimension
    rng = np.random.default_rng(spec.seed)
    f = np.zeros((n, n))
    rows = np.arange(n)
    for d in range(1, spec.bandwidth + 1):
        vals = spec.scale * math.exp(-spec.alpha * d) * rng.uniform(-1.0, 1.0, n - d)
        f[rows[:-d], rows[d:]] = vals
        f[rows[d:], rows[:-d]] = vals
    radius = np.sum(np.abs(f), axis=1)
    if np.any(2.0 * radius > hi - lo):
        raise ValueError(
            f"infeasible spectral target {spec.spectral_target}: off-diagonal row sums "
            f"up to {radius.max():.3g} do not fit"
        )
    diag = np.where(spec.low_sites, lo + radius, hi - radius)
    # rounding can push a disc edge one ulp outside the target
    for _ in range(4):
        below = diag - radius < lo
        above = diag + radius > hi
        if not (below.any() or above.any()):
            break
        diag = np.where(below, np.nextafter(diag, np.inf), diag)
        diag = np.where(above, np.nextafter(diag, -np.inf), diag)
    f[rows, rows] = diag
    return f
