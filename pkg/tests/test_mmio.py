import numpy as np
import pytest

from spamm_ec import quadtree as qt
from spamm_ec.mmio import read_matrix_market, write_matrix_market

from conftest import random_block_sparse


def test_round_trip_is_bitwise(rng, tmp_path):
    a = random_block_sparse(rng, 45, 4, density=0.3, spread=12)
    x = qt.from_dense(a, 4)
    path = tmp_path / "m.mtx"
    write_matrix_market(path, x)
    y = read_matrix_market(path, 4)
    assert y.dimension == 45
    np.testing.assert_array_equal(qt.to_dense(y), a)


def test_leaf_size_is_chosen_on_read(rng, tmp_path):
    a = random_block_sparse(rng, 20, 4, density=0.5)
    path = tmp_path / "m.mtx"
    write_matrix_market(path, qt.from_dense(a, 4))
    y = read_matrix_market(path, 8)
    assert y.leaf_size == 8
    np.testing.assert_array_equal(qt.to_dense(y), a)


def test_file_layout(tmp_path):
    x = qt.from_coordinates([(0, 0, 1.5), (2, 1, -0.25)], 3, 2)
    path = tmp_path / "small.mtx"
    write_matrix_market(path, x)
    lines = path.read_text().splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate real general"
    body = [ln for ln in lines[1:] if not ln.startswith("%")]
    assert body[0].split() == ["3", "3", "2"]
    entries = {(int(i), int(j)): float(v) for i, j, v in (ln.split() for ln in body[1:])}
    assert entries == {(1, 1): 1.5, (3, 2): -0.25}


def test_empty_matrix(tmp_path):
    path = tmp_path / "empty.mtx"
    write_matrix_market(path, qt.zeros(5, 2))
    y = read_matrix_market(path, 2)
    assert y.dimension == 5 and y.root is qt.ZERO


def test_reads_symmetric_storage(tmp_path):
    path = tmp_path / "sym.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "3 3 3\n"
        "1 1 2.0\n"
        "2 1 -1.0\n"
        "3 3 4.0\n"
    )
    y = read_matrix_market(path, 2)
    np.testing.assert_array_equal(qt.to_dense(y), [[2.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 4.0]])


def test_rejects_rectangular(tmp_path):
    path = tmp_path / "rect.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 3 1.0\n")
    with pytest.raises(ValueError):
        read_matrix_market(path)
