"""Sparse approximate matrix multiplication with Frobenius-norm error control."""

from .errorctl import (
    ControlledProduct,
    ToleranceGrid,
    TruncationResult,
    cse,
    select_tolerance,
    spamm_with_error_control,
    truncate,
)
from .mmio import read_matrix_market, write_matrix_market
from .multiply import multiply_exact, spamm, square
from .purification import (
    ErrorBudget,
    PurificationConfig,
    PurificationResult,
    RunRecord,
    SpectralTransform,
    initial_transform,
    purify,
    sp2_step,
)
from .quadtree import (
    ZERO,
    QuadTreeMatrix,
    add,
    from_coordinates,
    from_dense,
    frobenius_norm,
    identity,
    nnz,
    nnz_blocks,
    scale,
    subtract,
    to_dense,
    trace,
)

__version__ = "0.1.0"
