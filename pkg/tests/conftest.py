import math

import numpy as np
import pytest

from spamm_ec import oracle, quadtree as qt
from spamm_ec.purification import SpectralTransform, initial_transform


def random_block_sparse(rng, n, leaf, density=0.5, spread=6.0):
    """Dense n x n array whose leaf blocks are zero with probability 1 - density
    and otherwise scaled by 10**U(-spread, 0)."""
    nb = -(-n // leaf)
    a = np.zeros((nb * leaf, nb * leaf))
    for i in range(nb):
        for j in range(nb):
            if rng.random() < density:
                a[i * leaf:(i + 1) * leaf, j * leaf:(j + 1) * leaf] = (
                    rng.standard_normal((leaf, leaf)) * 10.0 ** rng.uniform(-spread, 0)
                )
    return a[:n, :n].copy()


def decay_start_matrix(n, seed, alpha=0.5, leaf=32):
    """Transformed starting matrix X_0 of a generated decay Hamiltonian."""
    spec = oracle.DecayModelSpec(n, alpha=alpha, seed=seed)
    f = oracle.generate_decay_matrix(spec)
    return initial_transform(qt.from_dense(f, leaf), SpectralTransform(*spec.spectral_target))


def padded(a, leaf):
    n = a.shape[0]
    p = leaf
    while p < n:
        p *= 2
    out = np.zeros((p, p))
    out[:n, :n] = a
    return out


def dense_spamm(a, b, tau, leaf):
    """Reference SpAMM on padded dense arrays, norms recomputed at every level."""
    a, b = padded(a, leaf), padded(b, leaf)

    def rec(x, y):
        if np.linalg.norm(x) * np.linalg.norm(y) < tau:
            return np.zeros((x.shape[0], y.shape[1]))
        if x.shape[0] == leaf:
            return x @ y
        h = x.shape[0] // 2
        xs = [[x[:h, :h], x[:h, h:]], [x[h:, :h], x[h:, h:]]]
        ys = [[y[:h, :h], y[:h, h:]], [y[h:, :h], y[h:, h:]]]
        c = np.zeros_like(x)
        for i in (0, 1):
            for j in (0, 1):
                c[i * h:(i + 1) * h, j * h:(j + 1) * h] = rec(xs[i][0], ys[0][j]) + rec(xs[i][1], ys[1][j])
        return c

    return rec(a, b)


def dense_cse(a, b, tau, leaf):
    """Reference error bound for one tolerance on padded dense arrays."""
    a, b = padded(a, leaf), padded(b, leaf)

    def rec(x, y):
        p = np.linalg.norm(x) * np.linalg.norm(y)
        if p == 0:
            return 0.0
        if x.shape[0] == leaf:
            return p if p < tau else 0.0
        h = x.shape[0] // 2
        xs = [[x[:h, :h], x[:h, h:]], [x[h:, :h], x[h:, h:]]]
        ys = [[y[:h, :h], y[:h, h:]], [y[h:, :h], y[h:, h:]]]
        total = 0.0
        for i in (0, 1):
            for j in (0, 1):
                total += (rec(xs[i][0], ys[0][j]) + rec(xs[i][1], ys[1][j])) ** 2
        return math.sqrt(total)

    return rec(a, b)


def tree_nodes(node):
    yield node
    if isinstance(node, qt.Inner):
        for c in node.children:
            yield from tree_nodes(c)


def assert_tree_consistent(x, rtol=1e-12):
    """Cached norms match recomputed ones and no inner node is all-zero."""

    def rec(node):
        if node is qt.ZERO:
            return 0.0
        if isinstance(node, qt.Leaf):
            assert node.block.any()
            true = float(np.linalg.norm(node.block))
        else:
            assert not all(c is qt.ZERO for c in node.children)
            true = math.sqrt(sum(rec(c) ** 2 for c in node.children))
        assert node.norm == pytest.approx(true, rel=rtol, abs=0.0)
        return true

    rec(x.root)


@pytest.fixture
def rng():
    return np.random.default_rng(20191125)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance verdict line; all lines are repeated in the terminal summary."""

    def emit(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
