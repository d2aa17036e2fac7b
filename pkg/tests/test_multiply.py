import numpy as np
import pytest

from spamm_ec import oracle, quadtree as qt
from spamm_ec.multiply import leaf_product, multiply_exact, spamm

from conftest import dense_spamm, random_block_sparse, tree_nodes


def test_leaf_product_accumulates_in_k_order(rng):
    a = rng.standard_normal((5, 7))
    b = rng.standard_normal((7, 3))
    expected = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            s = 0.0
            for k in range(7):
                s += a[i, k] * b[k, j]
            expected[i, j] = s
    np.testing.assert_array_equal(leaf_product(a, b), expected)


def test_times_identity_is_exact(rng):
    a = qt.from_dense(rng.standard_normal((24, 24)), 8)
    c = multiply_exact(a, qt.identity(24, 8))
    np.testing.assert_array_equal(qt.to_dense(c), qt.to_dense(a))


def test_times_zero():
    a = qt.identity(16, 4)
    assert multiply_exact(a, qt.zeros(16, 4)).root is qt.ZERO


def test_matches_dense_oracle_64(rng):
    a, b = rng.standard_normal((64, 64)), rng.standard_normal((64, 64))
    c = qt.to_dense(multiply_exact(qt.from_dense(a, 8), qt.from_dense(b, 8)))
    ref = oracle.dense_multiply(a, b)
    assert np.linalg.norm(c - ref) / np.linalg.norm(ref) < 1e-12


def test_tau_zero_is_bitwise_exact(rng):
    a = qt.from_dense(random_block_sparse(rng, 50, 4, 0.6), 4)
    b = qt.from_dense(random_block_sparse(rng, 50, 4, 0.6), 4)
    np.testing.assert_array_equal(qt.to_dense(spamm(a, b, 0.0)), qt.to_dense(multiply_exact(a, b)))


def test_root_skip(rng):
    a = qt.from_dense(rng.standard_normal((16, 16)), 4)
    b = qt.from_dense(rng.standard_normal((16, 16)), 4)
    assert spamm(a, b, 1.0001 * a.norm * b.norm).root is qt.ZERO
    # strict comparison: equality does not skip (single leaf, so no deeper test)
    c, d = qt.from_dense(rng.standard_normal((4, 4)), 4), qt.from_dense(rng.standard_normal((4, 4)), 4)
    assert spamm(c, d, c.norm * d.norm).root is not qt.ZERO


def test_single_quadrant_pair_dropped(rng):
    # 8x8 with leaf 4: make A[1][1] tiny so only the A11 B1j products are small
    a = rng.standard_normal((8, 8))
    b = rng.standard_normal((8, 8))
    a[4:, 4:] *= 1e-6
    x, y = qt.from_dense(a, 4), qt.from_dense(b, 4)
    small = np.linalg.norm(a[4:, 4:]) * max(np.linalg.norm(b[4:, :4]), np.linalg.norm(b[4:, 4:]))
    others = [
        np.linalg.norm(a[r, k]) * np.linalg.norm(b[k, c])
        for r in (slice(0, 4), slice(4, 8))
        for k in (slice(0, 4), slice(4, 8))
        for c in (slice(0, 4), slice(4, 8))
        if not (r.start == 4 and k.start == 4)
    ]
    tau = np.sqrt(small * min(others))
    assert small < tau < min(others) < x.norm * y.norm

    expected = a @ b
    expected[4:, :] -= a[4:, 4:] @ b[4:, :]
    got = qt.to_dense(spamm(x, y, tau))
    np.testing.assert_allclose(got, expected, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(got, dense_spamm(a, b, tau, 4), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("n,leaf", [(16, 2), (33, 4), (64, 8)])
def test_matches_brute_force_recursion(rng, n, leaf):
    a = random_block_sparse(rng, n, leaf, 0.7, spread=5)
    b = random_block_sparse(rng, n, leaf, 0.7, spread=5)
    x, y = qt.from_dense(a, leaf), qt.from_dense(b, leaf)
    scale = x.norm * y.norm
    for rel in (1e-8, 1e-5, 1e-3, 1e-1):
        got = qt.to_dense(spamm(x, y, rel * scale))
        ref = dense_spamm(a, b, rel * scale, leaf)[:n, :n]
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-14 * scale)


def _positions(node, path=()):
    out = set()
    if node is qt.ZERO:
        return out
    out.add(path)
    if isinstance(node, qt.Inner):
        for q, c in enumerate(node.children):
            out |= _positions(c, path + (q,))
    return out


def test_monotone_sparsity(rng):
    a = qt.from_dense(random_block_sparse(rng, 64, 4, 0.8), 4)
    b = qt.from_dense(random_block_sparse(rng, 64, 4, 0.8), 4)
    taus = [0.0] + list(np.geomspace(1e-10, 1.0, 12) * a.norm * b.norm)
    structures = [_positions(spamm(a, b, t).root) for t in taus]
    for loose, tight in zip(structures, structures[1:]):
        assert tight <= loose


def test_worker_count_does_not_change_result(rng):
    a = qt.from_dense(random_block_sparse(rng, 96, 8, 0.8), 8)
    b = qt.from_dense(random_block_sparse(rng, 96, 8, 0.8), 8)
    tau = 1e-4 * a.norm * b.norm
    ref = qt.to_dense(spamm(a, b, tau))
    for w in (2, 4, 8):
        np.testing.assert_array_equal(qt.to_dense(spamm(a, b, tau, workers=w)), ref)
        np.testing.assert_array_equal(qt.to_dense(spamm(a, b, tau, workers=w)), ref)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        multiply_exact(qt.identity(8, 4), qt.identity(12, 4))
    with pytest.raises(ValueError):
        spamm(qt.identity(8, 4), qt.identity(8, 4), -1.0)


def test_norm_cache_after_product(rng):
    a = qt.from_dense(random_block_sparse(rng, 40, 4, 0.8), 4)
    c = multiply_exact(a, a)
    for node in tree_nodes(c.root):
        if isinstance(node, qt.Leaf):
            assert node.norm == pytest.approx(np.linalg.norm(node.block), rel=1e-13)
