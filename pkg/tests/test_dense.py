"""Tests for the dense tensor kernel and its index algebra."""

import itertools

import numpy as np
import pytest

from mposvd.dense import (
    DenseTensor,
    kron,
    matricize,
    mode_product,
    multi_index,
    outer,
    reshape,
    split_index,
)


def tensor_1_to_24():
    return DenseTensor(np.arange(1, 25), (4, 3, 2))


# -- multi_index / split_index -----------------------------------------------

@pytest.mark.parametrize("indices, dims, expected", [
    ([1, 1, 1], [4, 3, 2], 1),
    ([2, 3, 1], [4, 3, 2], 10),
    ([4, 3, 2], [4, 3, 2], 24),
])
def test_multi_index_values(indices, dims, expected):
    assert multi_index(indices, dims) == expected


def test_multi_index_errors():
    with pytest.raises(ValueError):
        multi_index([1, 1], [4, 3, 2])
    with pytest.raises(IndexError):
        multi_index([5, 1, 1], [4, 3, 2])
    with pytest.raises(IndexError):
        multi_index([0, 1, 1], [4, 3, 2])


@pytest.mark.parametrize("dims", [(4, 3, 2), (2, 2, 2, 2), (10, 10, 10),
                                  (7,), (1, 5, 1, 9)])
def test_split_index_roundtrip_exhaustive(dims):
    # exhaustive over every valid multi-index (all products <= 1e4)
    for idx in itertools.product(*(range(1, n + 1) for n in dims)):
        lin = multi_index(list(idx), dims)
        assert split_index(lin, dims) == list(idx)
        assert 1 <= lin <= np.prod(dims)


def test_split_index_out_of_range():
    with pytest.raises(IndexError):
        split_index(25, (4, 3, 2))
    with pytest.raises(IndexError):
        split_index(0, (4, 3, 2))


# -- reshape ------------------------------------------------------------------

def test_reshape_mode1_unfolding_of_1_to_24():
    got = reshape(tensor_1_to_24(), (4, 6)).to_array()
    want = np.array([
        [1, 5, 9, 13, 17, 21],
        [2, 6, 10, 14, 18, 22],
        [3, 7, 11, 15, 19, 23],
        [4, 8, 12, 16, 20, 24],
    ], dtype=float)
    assert np.array_equal(got, want)


def test_reshape_vectorization():
    got = reshape(tensor_1_to_24(), (24, 1)).to_array()
    assert np.array_equal(got[:, 0], np.arange(1, 25))


def test_reshape_identity_and_data_verbatim(rng):
    t = DenseTensor(rng.standard_normal(24), (4, 3, 2))
    same = reshape(t, (4, 3, 2))
    assert same.dims == t.dims
    assert np.array_equal(same.data, t.data)
    back = reshape(reshape(t, (2, 12)), (4, 3, 2))
    assert np.array_equal(back.data, t.data)


def test_reshape_count_mismatch():
    with pytest.raises(ValueError):
        reshape(tensor_1_to_24(), (5, 5))


# -- matricize ----------------------------------------------------------------

def _matricize_oracle(t, mode):
    """Index-loop application of the unfolding definition."""
    dims = t.dims
    rest = [dims[k] for k in range(len(dims)) if k != mode - 1]
    out = np.zeros((dims[mode - 1], int(np.prod(rest))))
    arr = t.to_array()
    for idx in itertools.product(*(range(1, n + 1) for n in dims)):
        row = idx[mode - 1]
        col_idx = [idx[k] for k in range(len(dims)) if k != mode - 1]
        col = multi_index(col_idx, rest) if rest else 1
        out[row - 1, col - 1] = arr[tuple(i - 1 for i in idx)]
    return out


def test_matricize_mode1_equals_reshape():
    t = tensor_1_to_24()
    assert np.array_equal(matricize(t, 1).to_array(),
                          reshape(t, (4, 6)).to_array())


def test_matricize_vector():
    v = DenseTensor([1.0, 2.0, 3.0], (3,))
    got = matricize(v, 1).to_array()
    assert got.shape == (3, 1)
    assert np.array_equal(got[:, 0], [1, 2, 3])


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_matricize_vs_loop_oracle(mode):
    t = tensor_1_to_24()
    assert np.array_equal(matricize(t, mode).to_array(),
                          _matricize_oracle(t, mode))


def test_matricize_mode_out_of_range():
    with pytest.raises(ValueError):
        matricize(tensor_1_to_24(), 4)


# -- kron ---------------------------------------------------------------------

def _kron_oracle(a, b):
    """Nested loops over the combined-index definition."""
    d = max(a.order, b.order)
    adims = a.dims + (1,) * (d - a.order)
    bdims = b.dims + (1,) * (d - b.order)
    aa = a.to_array().reshape(adims)
    bb = b.to_array().reshape(bdims)
    out = np.zeros([i * j for i, j in zip(adims, bdims)])
    for ai in itertools.product(*(range(n) for n in adims)):
        for bi in itertools.product(*(range(n) for n in bdims)):
            pos = tuple(j + J * i for i, j, J in zip(ai, bi, bdims))
            out[pos] = aa[ai] * bb[bi]
    return out


def test_kron_identities():
    eye2 = DenseTensor.from_array(np.eye(2))
    got = kron(eye2, eye2).to_array()
    assert np.array_equal(got, np.eye(4))


def test_kron_matrix_with_identity():
    a = DenseTensor.from_array(np.array([[1.0, 2.0], [3.0, 4.0]]))
    got = kron(a, DenseTensor.from_array(np.eye(2))).to_array()
    want = np.array([
        [1, 0, 2, 0],
        [0, 1, 0, 2],
        [3, 0, 4, 0],
        [0, 3, 0, 4],
    ], dtype=float)
    assert np.array_equal(got, want)
    assert np.array_equal(got, _kron_oracle(
        a, DenseTensor.from_array(np.eye(2))))


def test_kron_vs_oracle_random(rng):
    a = DenseTensor.from_array(rng.integers(-4, 5, size=(2, 3, 2)))
    b = DenseTensor.from_array(rng.integers(-4, 5, size=(3, 2, 2)))
    assert np.array_equal(kron(a, b).to_array(), _kron_oracle(a, b))


def test_kron_scalar():
    s = DenseTensor([3.0], ())
    t = tensor_1_to_24()
    got = kron(s, t)
    assert got.dims == t.dims
    assert np.array_equal(got.to_array(), 3.0 * t.to_array())


def test_kron_associative_exact_on_integers(rng):
    a = DenseTensor.from_array(rng.integers(-3, 4, size=(2, 2)))
    b = DenseTensor.from_array(rng.integers(-3, 4, size=(3, 2)))
    c = DenseTensor.from_array(rng.integers(-3, 4, size=(2, 3)))
    left = kron(kron(a, b), c).to_array()
    right = kron(a, kron(b, c)).to_array()
    assert np.array_equal(left, right)


# -- outer --------------------------------------------------------------------

def test_outer_vectors():
    u = DenseTensor([1.0, 2.0], (2,))
    v = DenseTensor([3.0, 5.0], (2,))
    assert np.array_equal(outer(u, v).to_array(),
                          np.array([[3, 5], [6, 10]], dtype=float))


def test_outer_permute_reshape_equals_kron(rng):
    a = DenseTensor.from_array(rng.integers(-4, 5, size=(2, 3)))
    b = DenseTensor.from_array(rng.integers(-4, 5, size=(3, 2)))
    d = outer(a, b).to_array()
    # interleave (j1, i1, j2, i2) then merge pairs first-index-fastest
    interleaved = d.transpose(2, 0, 3, 1)
    merged = interleaved.reshape(6, 6, order="F")
    assert np.array_equal(merged, kron(a, b).to_array())
    assert np.array_equal(merged, _kron_oracle(a, b))


def test_outer_with_scalar():
    t = tensor_1_to_24()
    got = outer(t, DenseTensor([1.0], ()))
    assert got.dims == t.dims
    assert np.array_equal(got.to_array(), t.to_array())


# -- mode_product -------------------------------------------------------------

def test_mode_product_identity(rng):
    t = DenseTensor.from_array(rng.standard_normal((3, 4, 2)))
    for mode in (1, 2, 3):
        eye = DenseTensor.from_array(np.eye(t.dims[mode - 1]))
        assert np.array_equal(mode_product(t, eye, mode).to_array(),
                              t.to_array())


def test_mode_product_vs_triple_loop_oracle(rng):
    # contract modes 1 and 3 of a 2x2x2 tensor with a matrix and a vector,
    # checked against explicit loops over the definition
    t = DenseTensor.from_array(rng.standard_normal((2, 2, 2)))
    u = DenseTensor.from_array(rng.standard_normal((2, 2)))
    w = DenseTensor.from_array(rng.standard_normal(2))
    got = mode_product(mode_product(t, u, 1), w, 3).to_array()
    arr, umat, wvec = t.to_array(), u.to_array(), w.to_array()
    want = np.zeros((2, 2))
    for r in range(2):
        for m in range(2):
            for i in range(2):
                for j in range(2):
                    want[r, m] += arr[i, m, j] * umat[r, i] * wvec[j]
    assert np.allclose(got, want, atol=1e-15)


def test_mode_product_zero_row():
    t = tensor_1_to_24()
    z = DenseTensor.from_array(np.zeros((1, 3)))
    assert np.array_equal(mode_product(t, z, 2).to_array(),
                          np.zeros((4, 1, 2)))


def test_mode_product_extent_mismatch():
    t = tensor_1_to_24()
    with pytest.raises(ValueError):
        mode_product(t, DenseTensor.from_array(np.eye(5)), 1)
    with pytest.raises(ValueError):
        mode_product(t, DenseTensor.from_array(np.eye(4)), 9)


# -- DenseTensor container ----------------------------------------------------

def test_dense_tensor_validation():
    with pytest.raises(ValueError):
        DenseTensor([1.0, 2.0], (3,))
    with pytest.raises(ValueError):
        DenseTensor([1.0], (0,))


def test_scalar_tensor():
    s = DenseTensor([7.0], ())
    assert s.order == 0
    assert s.size == 1
    assert float(s.to_array()) == 7.0


def test_from_array_first_index_fastest():
    arr = np.array([[1.0, 3.0], [2.0, 4.0]])
    t = DenseTensor.from_array(arr)
    assert np.array_equal(t.data, [1, 2, 3, 4])
