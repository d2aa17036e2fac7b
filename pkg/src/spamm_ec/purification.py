"""SP2 density matrix purification with per-iteration Frobenius error control.

Three drivers share one loop and differ only in how each iterate is
approximated:

``truncmul``
    exact square, then drop small leaf blocks within ``delta_i``;
``spamm``
    error-controlled SpAMM square within ``delta_i``, no truncation, and
    the starting matrix is used as is;
``hybrid``
    error-controlled SpAMM square within ``delta_i / 2``, then truncation
    within ``delta_i / 2``.

In every case ``||X~_i - f_i(X~_{i-1})||_F < delta_i``.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

from .errorctl import ToleranceGrid, spamm_with_error_control, truncate
from .multiply import multiply_exact
from .quadtree import QuadTreeMatrix, identity, nnz, nnz_blocks, scale, subtract, trace

__all__ = [
    "VARIANTS",
    "SpectralTransform",
    "ErrorBudget",
    "PurificationConfig",
    "RunRecord",
    "PurificationResult",
    "NotConvergedWarning",
    "initial_transform",
    "sp2_step",
    "approximate_square",
    "apply_polynomial",
    "purify",
]

logger = logging.getLogger(__name__)

VARIANTS = ("truncmul", "spamm", "hybrid")

SQUARE = "x^2"
REFLECT = "2x-x^2"


class NotConvergedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SpectralTransform:
    """Interval ``[lambda_min, lambda_max]`` enclosing the spectrum of F."""

    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_max must exceed lambda_min")


def initial_transform(f: QuadTreeMatrix, t: SpectralTransform) -> QuadTreeMatrix:
    """``X_0 = (lambda_max I - F) / (lambda_max - lambda_min)``.

    Maps the spectrum into ``[0, 1]`` with the order reversed, so the
    lowest (occupied) eigenvalues of F end up near 1.
    """
    width = t.lambda_max - t.lambda_min
    shifted = subtract(scale(identity(f.dimension, f.leaf_size), t.lambda_max), f)
    return scale(shifted, 1.0 / width)


def sp2_step(x: QuadTreeMatrix, occupation: int) -> tuple[str, str]:
    """Pick the SP2 polynomial that steers ``trace(X)`` towards ``occupation``."""
    tr = trace(x)
    if not math.isfinite(tr):
        raise ValueError("trace is not finite")
    if tr > occupation:
        return SQUARE, f"trace {tr:.6g} > {occupation}: f(x) = x^2"
    return REFLECT, f"trace {tr:.6g} <= {occupation}: f(x) = 2x - x^2"


def apply_polynomial(choice: str, x: QuadTreeMatrix, x_squared: QuadTreeMatrix) -> QuadTreeMatrix:
    if choice == SQUARE:
        return x_squared
    if choice == REFLECT:
        return subtract(scale(x, 2.0), x_squared)
    raise ValueError(f"unknown polynomial {choice!r}")


@dataclass(frozen=True)
class ErrorBudget:
    """Per-iteration tolerances.

    ``initial`` bounds the truncation of the starting matrix and
    ``deltas[i - 1]`` bounds the error of iteration ``i``. A zero entry
    means that step is carried out exactly.
    """

    initial: float
    deltas: tuple[float, ...]

    def __post_init__(self):
        if self.initial < 0 or any(d < 0 for d in self.deltas):
            raise ValueError("tolerances must be nonnegative")

    @classmethod
    def geometric(cls, epsilon: float, iterations: int, ratio: float = 0.5) -> ErrorBudget:
        """Half of ``epsilon`` for the start, the other half spread as ``ratio**i``.

        Later iterations receive geometrically tighter tolerances and the
        total never exceeds ``epsilon``.
        """
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        half = 0.5 * epsilon
        norm = (1.0 - ratio) / (1.0 - ratio ** iterations)
        deltas = tuple(half * norm * ratio ** (i - 1) for i in range(1, iterations + 1))
        return cls(half, deltas)

    @classmethod
    def exact(cls, iterations: int) -> ErrorBudget:
        return cls(0.0, (0.0,) * iterations)

    def __getitem__(self, i: int) -> float:
        return self.initial if i == 0 else self.deltas[i - 1]

    @property
    def total(self) -> float:
        return self.initial + sum(self.deltas)


@dataclass(frozen=True)
class PurificationConfig:
    variant: str
    occupation: int
    max_iterations: int = 100
    epsilon: float = 1e-5
    grid: ToleranceGrid = field(default_factory=ToleranceGrid.geometric)
    eta: float | None = None
    budget: ErrorBudget | None = None
    verify: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.occupation <= 0:
            raise ValueError("occupation must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def stop_threshold(self) -> float:
        return self.eta if self.eta is not None else self.epsilon / 10.0

    def error_budget(self) -> ErrorBudget:
        if self.budget is not None:
            return self.budget
        return ErrorBudget.geometric(self.epsilon, self.max_iterations)


@dataclass
class RunRecord:
    """Measurements of one approximate multiplication step."""

    variant: str
    iter: int
    tolerance: float
    chosen_tau: float | None = None
    t_mul: float = 0.0
    t_trunc: float = 0.0
    t_spamm: float = 0.0
    t_cse: float = 0.0
    nnz_in: int = 0
    nnz_mid: int = 0
    nnz_out: int = 0
    nnz_blocks_out: int = 0
    realized_error: float | None = None
    status: str = "ok"
    polynomial: str = ""
    bound: float | None = None


def approximate_square(
    x: QuadTreeMatrix,
    variant: str,
    delta: float,
    grid: ToleranceGrid,
    record: RunRecord | None = None,
    *,
    polynomial: Callable[[QuadTreeMatrix], QuadTreeMatrix] | None = None,
    workers: int = 1,
) -> tuple[QuadTreeMatrix, QuadTreeMatrix]:
    """Approximate ``g(x^2)`` for one variant within ``delta``.

    ``polynomial`` maps the (approximate) square to the iterate and
    defaults to the identity. Returns ``(square, result)``; ``record``, if
    given, receives timings, nnz counts and the chosen tolerance.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    polynomial = polynomial or (lambda s: s)
    timings: dict[str, float] = {}
    tau = 0.0
    bound = 0.0
    if variant == "truncmul" or delta == 0.0:
        t0 = time.perf_counter()
        sq = multiply_exact(x, x, workers=workers)
        timings["mul"] = time.perf_counter() - t0
    else:
        budget = delta if variant == "spamm" else 0.5 * delta
        sq, tau, bound = spamm_with_error_control(x, x, budget, grid, timings=timings, workers=workers)
    mid = polynomial(sq)

    out = mid
    if variant != "spamm":
        t0 = time.perf_counter()
        out = truncate(mid, delta if variant == "truncmul" else 0.5 * delta).matrix
        timings["trunc"] = time.perf_counter() - t0

    if record is not None:
        record.chosen_tau = tau
        record.bound = bound
        record.t_mul = timings.get("mul", 0.0)
        record.t_trunc = timings.get("trunc", 0.0)
        record.t_spamm = timings.get("spamm", 0.0)
        record.t_cse = timings.get("cse", 0.0)
        record.nnz_in = nnz(x)
        record.nnz_mid = nnz(mid)
        record.nnz_out = nnz(out)
        record.nnz_blocks_out = nnz_blocks(out)
    return sq, out


@dataclass
class PurificationResult:
    density: QuadTreeMatrix
    records: list[RunRecord]
    converged: bool
    iterations: int
    start: QuadTreeMatrix

    def __iter__(self):
        # allows ``d, log = purify(...)``
        return iter((self.density, self.records))


def purify(x0: QuadTreeMatrix, config: PurificationConfig) -> PurificationResult:
    """Run SP2 purification from the transformed starting matrix ``x0``.

    Iteration ``i`` squares ``X~_{i-1}`` with the configured variant. If
    ``|trace(X~_{i-1}) - trace(X~_{i-1}^2)|`` is below the stop threshold
    the previous iterate is returned; otherwise the SP2 polynomial is
    applied and the result becomes ``X~_i``. Reaching ``max_iterations``
    without meeting the threshold issues :class:`NotConvergedWarning` and
    sets ``converged = False``.
    """
    variant = config.variant
    budget = config.error_budget()
    if len(budget.deltas) < config.max_iterations:
        raise ValueError("error budget shorter than max_iterations")
    if config.occupation > x0.dimension:
        raise ValueError("occupation exceeds the matrix dimension")

    x = x0
    if variant != "spamm" and budget.initial > 0:
        x = truncate(x0, budget.initial).matrix
    start = x

    records: list[RunRecord] = []
    converged = False
    iterations = 0
    for i in range(1, config.max_iterations + 1):
        delta = budget[i]
        choice, description = sp2_step(x, config.occupation)
        record = RunRecord(variant=variant, iter=i, tolerance=delta, polynomial=choice)

        def poly(s, x=x, choice=choice):
            return apply_polynomial(choice, x, s)

        sq, y = approximate_square(
            x, variant, delta, config.grid, record, polynomial=poly, workers=config.workers
        )
        if abs(trace(x) - trace(sq)) < config.stop_threshold:
            converged = True
            break

        if config.verify:
            exact = apply_polynomial(choice, x, multiply_exact(x, x))
            record.realized_error = subtract(y, exact).norm
            if delta > 0 and not record.realized_error < delta:
                record.status = "violation"
            elif delta == 0 and record.realized_error != 0:
                record.status = "violation"
        logger.debug("iteration %d: %s, tau=%g, nnz=%d", i, description, record.chosen_tau, record.nnz_out)
        records.append(record)
        iterations = i
        x = y

    if not converged:
        warnings.warn(
            f"{variant} purification did not converge in {config.max_iterations} iterations",
            NotConvergedWarning,
            stacklevel=2,
        )
    return PurificationResult(x, records, converged, iterations, start)

