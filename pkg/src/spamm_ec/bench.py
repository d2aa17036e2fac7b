"""Squaring and purification experiments comparing truncmul, SpAMM and hybrid.

The squaring protocol takes a matrix, approximately squares it with a
variant and tolerance, squares that result again with the same tolerance,
and then checks the second product against an exact dense square of its
input. Only the second iteration is recorded.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracle
from .errorctl import ToleranceGrid
from .mmio import read_matrix_market
from .purification import (
    VARIANTS,
    PurificationConfig,
    RunRecord,
    SpectralTransform,
    approximate_square,
    initial_transform,
    purify,
)
from .quadtree import DEFAULT_LEAF_SIZE, QuadTreeMatrix, from_dense, nnz, nnz_blocks, to_dense

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "parse_generator",
    "parse_tolerances",
    "load_matrix",
    "run_squaring_experiment",
    "run_purification_experiment",
    "sharpness",
    "check_sharpness_order",
    "emit",
]

CSV_COLUMNS = (
    "variant", "iter", "tolerance", "chosen_tau", "t_mul", "t_trunc", "t_spamm", "t_cse",
    "nnz_in", "nnz_mid", "nnz_out", "nnz_blocks_out", "realized_error", "status",
)

# Reported in JSON output; this implementation always runs in one process.
PROCESSES = 1

DEFAULT_TOLERANCES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


@dataclass
class ExperimentConfig:
    matrix: str | None = None
    variants: tuple[str, ...] = VARIANTS
    tolerances: tuple[float, ...] = DEFAULT_TOLERANCES
    grid_start: float = 1.0
    grid_ratio: float = 0.9
    grid_count: int = 350
    leaf_size: int = DEFAULT_LEAF_SIZE
    seed: int = 0
    out: str | None = None
    workers: int = 1
    # purification runs
    occupation: int | None = None
    epsilon: float = 1e-5
    max_iterations: int = 100
    oracle_limit: int = 1024

    def __post_init__(self):
        if not self.variants:
            raise ValueError("at least one variant is required")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; expected one of {VARIANTS}")
        if not self.tolerances:
            raise ValueError("at least one tolerance is required")
        if any(not t > 0 for t in self.tolerances):
            raise ValueError("tolerances must be positive")

    @property
    def grid(self) -> ToleranceGrid:
        return ToleranceGrid.geometric(self.grid_start, self.grid_ratio, self.grid_count)


def parse_generator(text: str, seed: int = 0) -> oracle.DecayModelSpec:
    """``"n,alpha,seed"`` (alpha and seed optional) -> :class:`DecayModelSpec`."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts or len(parts) > 3:
        raise ValueError(f"bad generator spec {text!r}; expected n[,alpha[,seed]]")
    n = int(parts[0])
    alpha = float(parts[1]) if len(parts) > 1 else 0.5
    seed = int(parts[2]) if len(parts) > 2 else seed
    return oracle.DecayModelSpec(n, alpha=alpha, seed=seed)


def parse_tolerances(text: str) -> tuple[float, ...]:
    """Parse ``"1e-2,1e-4"`` or ``"1e-2:1e-8:log"`` (one value per decade).

    ``"a:b:log:k"`` gives ``k`` log-spaced values from ``a`` to ``b``.
    """
    text = text.strip()
    if ":" not in text:
        return tuple(float(t) for t in text.split(",") if t.strip())
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[2] != "log":
        raise ValueError(f"bad tolerance range {text!r}; expected start:stop:log[:count]")
    start, stop = float(parts[0]), float(parts[1])
    if not (start > 0 and stop > 0):
        raise ValueError("tolerance range endpoints must be positive")
    count = int(parts[3]) if len(parts) == 4 else int(round(abs(math.log10(stop / start)))) + 1
    if count == 1:
        return (start,)
    exps = np.linspace(math.log10(start), math.log10(stop), count)
    return tuple(float(f"{10.0 ** e:.12g}") for e in exps)


def load_matrix(source: str, leaf_size: int = DEFAULT_LEAF_SIZE, seed: int = 0) -> QuadTreeMatrix:
    """Load ``source``: a MatrixMarket path or ``gen:n,alpha,seed``.

    A generated source yields the density matrix of a synthetic decay
    Hamiltonian, i.e. an already converged purification result.
    """
    if source.startswith("gen:"):
        spec = parse_generator(source[4:], seed)
        f = oracle.generate_decay_matrix(spec)
        d = oracle.density_matrix_oracle(f, spec.occupation)
        return from_dense(d, leaf_size)
    return read_matrix_market(source, leaf_size)


def run_squaring_experiment(config: ExperimentConfig, matrix: QuadTreeMatrix | None = None) -> list[RunRecord]:
    if matrix is None:
        if config.matrix is None:
            raise ValueError("no input matrix given")
        matrix = load_matrix(config.matrix, config.leaf_size, config.seed)
    grid = config.grid
    records = []
    for variant in config.variants:
        for tol in config.tolerances:
            _, x1 = approximate_square(matrix, variant, tol, grid, workers=config.workers)
            record = RunRecord(variant=variant, iter=2, tolerance=tol)
            _, x2 = approximate_square(x1, variant, tol, grid, record, workers=config.workers)
            x1_dense = to_dense(x1)
            exact = oracle.dense_multiply(x1_dense, x1_dense)
            record.realized_error = oracle.dense_frobenius(to_dense(x2) - exact)
            record.status = "ok" if record.realized_error < tol else "violation"
            records.append(record)
    return records


def run_purification_experiment(
    config: ExperimentConfig, spec: oracle.DecayModelSpec | None = None
) -> list[RunRecord]:
    """Purify a generated Hamiltonian with each configured variant.

    Per-iteration records are followed by one record per variant with
    ``iter = -1`` holding the final error against the eigensolver oracle
    (only when ``dimension <= oracle_limit``).
    """
    if spec is None:
        if config.matrix is None or not config.matrix.startswith("gen:"):
            raise ValueError("purification needs a generated matrix source 'gen:n,alpha,seed'")
        spec = parse_generator(config.matrix[4:], config.seed)
    f = oracle.generate_decay_matrix(spec)
    occupation = config.occupation if config.occupation is not None else spec.occupation
    x0 = initial_transform(from_dense(f, config.leaf_size), SpectralTransform(*spec.spectral_target))
    d_ref = oracle.density_matrix_oracle(f, occupation) if spec.dimension <= config.oracle_limit else None

    records = []
    for variant in config.variants:
        pc = PurificationConfig(
            variant,
            occupation,
            max_iterations=config.max_iterations,
            epsilon=config.epsilon,
            grid=config.grid,
            verify=True,
            workers=config.workers,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = purify(x0, pc)
        records.extend(result.records)
        final = RunRecord(variant=variant, iter=-1, tolerance=config.epsilon, polynomial="final")
        final.nnz_in = nnz(x0)
        final.nnz_out = nnz(result.density)
        final.nnz_blocks_out = nnz_blocks(result.density)
        for r in result.records:
            final.t_mul += r.t_mul
            final.t_trunc += r.t_trunc
            final.t_spamm += r.t_spamm
            final.t_cse += r.t_cse
        if d_ref is not None:
            final.realized_error = oracle.dense_frobenius(to_dense(result.density) - d_ref)
        if not result.converged:
            final.status = "not-converged"
        elif any(r.status != "ok" for r in result.records):
            final.status = "violation"
        elif final.realized_error is not None and not final.realized_error < config.epsilon:
            final.status = "violation"
        records.append(final)
    return records


def sharpness(records: list[RunRecord]) -> dict[str, float]:
    """Mean ``realized_error / tolerance`` per variant (1 is perfectly sharp)."""
    ratios: dict[str, list[float]] = {}
    for r in records:
        if r.realized_error is not None and r.iter >= 0:
            ratios.setdefault(r.variant, []).append(r.realized_error / r.tolerance)
    return {v: float(np.mean(x)) for v, x in ratios.items()}


def check_sharpness_order(records: list[RunRecord]) -> bool:
    """Soft check that truncmul is at least as sharp as hybrid, hybrid as spamm.

    Emits a warning and returns False when the ordering does not hold.
    """
    s = sharpness(records)
    order = [v for v in ("truncmul", "hybrid", "spamm") if v in s]
    ok = all(s[a] >= s[b] for a, b in zip(order, order[1:]))
    if not ok:
        warnings.warn(f"sharpness ordering truncmul >= hybrid >= spamm not observed: {s}", stacklevel=2)
    return ok


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit(records: list[RunRecord], path: str | os.PathLike, format: str = "csv", summary: dict | None = None) -> None:
    """Write records as CSV (fixed columns) or JSON; overwrites ``path``."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    elif format == "json":
        rows = []
        for r in records:
            row = dataclasses.asdict(r)
            row["processes"] = PROCESSES
            rows.append(row)
        payload = {"records": rows}
        if summary is not None:
            payload["summary"] = summary
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {format!r}; expected 'csv' or 'json'")
