"""Tests for MPO matrix products, QR/SVD sweeps and the randomized driver."""

import numpy as np
import pytest

from mposvd.mpo import (
    Mpo,
    contract_to_matrix,
    identity_mpo,
    mpo_from_dense,
    mpo_transpose,
    random_mpo,
    random_unit_rank_mpo,
    zero_mpo,
)
from mposvd.rsvd import (
    merge_leading_cores,
    mpo_matmul,
    mpo_qr,
    mpo_svd,
    reconstruct_matrix,
    subspace_iteration,
    tnrsvd,
)


def rel_err(got, want):
    denom = np.linalg.norm(want)
    return np.linalg.norm(got - want) / denom if denom else np.linalg.norm(got)


# -- matrix multiplication ----------------------------------------------------

def test_matmul_identity():
    a = random_mpo([2, 3, 2], [2, 2, 2], [3, 2], seed=0)
    s = mpo_matmul(a, identity_mpo([2, 2, 2]))
    assert np.allclose(contract_to_matrix(s), contract_to_matrix(a),
                       atol=1e-13)


def test_matmul_rank_product_rule():
    a = random_mpo([2, 2, 2], [2, 2, 2], [2, 3], seed=1)
    b = random_mpo([2, 2, 2], [2, 2, 2], [2, 2], seed=2)
    p = mpo_matmul(a, b)
    assert p.ranks == (1, 4, 6, 1)


def test_matmul_vs_dense_oracle():
    a = random_mpo([2, 3, 2], [3, 2, 2], [3, 2], seed=3)
    b = random_mpo([3, 2, 2], [2, 2, 3], [2, 3], seed=4)
    want = contract_to_matrix(a) @ contract_to_matrix(b)
    assert rel_err(contract_to_matrix(mpo_matmul(a, b)), want) <= 1e-13


def test_matmul_unit_rank_operand_preserves_ranks():
    a = random_mpo([4, 2, 2], [4, 2, 2], [3, 5], seed=5)
    o = random_unit_rank_mpo([4, 2, 2], 3, seed=6)
    assert mpo_matmul(a, o).ranks == a.ranks


def test_matmul_dim_mismatch():
    a = random_mpo([2, 2], [2, 2], [2], seed=7)
    b = random_mpo([2, 3], [2, 2], [2], seed=8)
    with pytest.raises(ValueError):
        mpo_matmul(a, b)
    with pytest.raises(ValueError):
        mpo_matmul(a, random_mpo([2, 2, 2], [2, 2, 2], [2, 2], seed=9))


# -- thin QR ------------------------------------------------------------------

def test_qr_orthogonality_and_reconstruction():
    y = random_unit_rank_mpo([16, 2, 2], 8, seed=10)
    q, r = mpo_qr(y)
    qmat = contract_to_matrix(q)
    ymat = contract_to_matrix(y)
    assert np.linalg.norm(qmat.T @ qmat - np.eye(8)) <= 1e-12
    assert rel_err(qmat @ r, ymat) <= 1e-13
    assert r.shape == (8, 8)
    # against the dense oracle: same column space
    q_dense, _ = np.linalg.qr(ymat)
    proj = q_dense @ (q_dense.T @ qmat)
    assert np.linalg.norm(proj - qmat) <= 1e-12


def test_qr_idempotent_up_to_signs():
    y = random_unit_rank_mpo([16, 2], 6, seed=11)
    q1, _ = mpo_qr(y)
    q2, r2 = mpo_qr(q1)
    assert np.allclose(np.abs(np.diag(r2)), np.ones(6), atol=1e-12)
    assert np.linalg.norm(r2 - np.diag(np.diag(r2))) <= 1e-12


def test_qr_with_rounding_stays_orthogonal():
    y = random_mpo([8, 2, 2, 2], [8, 1, 1, 1], [6, 6, 4], seed=12)
    ymat = contract_to_matrix(y)
    q, r = mpo_qr(y, round_tol=1e-10)
    qmat = contract_to_matrix(q)
    assert np.linalg.norm(qmat.T @ qmat - np.eye(8)) <= 1e-12
    assert rel_err(qmat @ r, ymat) <= 1e-9


def test_qr_requires_wide_first_core():
    y = random_unit_rank_mpo([4, 2, 2], 4, seed=13)
    mpo_qr(y)
    bad = random_mpo([2, 2, 2], [8, 1, 1], [2, 2], seed=14)
    with pytest.raises(ValueError):
        mpo_qr(bad)


def test_qr_single_core():
    y = random_mpo([8], [3], [], seed=15)
    q, r = mpo_qr(y)
    qmat = contract_to_matrix(q)
    assert np.linalg.norm(qmat.T @ qmat - np.eye(3)) <= 1e-13
    assert rel_err(qmat @ r, contract_to_matrix(y)) <= 1e-14


# -- economical SVD -----------------------------------------------------------

def test_svd_diagonal_case():
    b = Mpo([np.diag([3.0, 2.0, 1.0]).reshape(1, 3, 3, 1)])
    w, s, v = mpo_svd(b)
    assert np.allclose(s, [3.0, 2.0, 1.0], atol=1e-14)
    assert np.linalg.norm(w.T @ w - np.eye(3)) <= 1e-12


def test_svd_values_match_dense_oracle():
    b = random_mpo([3, 1, 1], [4, 2, 2], [3, 2], seed=16)
    w, s, v = mpo_svd(b)
    want = np.linalg.svd(contract_to_matrix(b), compute_uv=False)
    assert np.all(np.abs(s - want) <= 1e-12 * want[0])
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)


def test_svd_reconstruction_and_orthogonality():
    b = random_mpo([4, 1, 1], [4, 2, 3], [2, 3], seed=17)
    w, s, v = mpo_svd(b)
    bmat = contract_to_matrix(b)
    vmat = contract_to_matrix(v)
    assert vmat.shape == (24, 4)
    assert np.linalg.norm(vmat.T @ vmat - np.eye(4)) <= 1e-12
    assert rel_err(w @ np.diag(s) @ vmat.T, bmat) <= 1e-13


def test_svd_zero_input():
    b = zero_mpo([3, 1], [4, 2])
    w, s, v = mpo_svd(b)
    assert np.all(s == 0)


def test_svd_requires_wide_first_core():
    b = random_mpo([4, 1], [2, 2], [2], seed=18)
    with pytest.raises(ValueError):
        mpo_svd(b)


# -- merging ------------------------------------------------------------------

def test_merge_leading_cores_shapes():
    m = random_mpo([2] * 10, [2] * 10, [3] * 9, seed=19)
    merged = merge_leading_cores(m, 5)
    assert merged.num_cores == 6
    assert merged.cores[0].shape == (1, 32, 32, 3)


def test_merge_identity_and_full_collapse():
    m = random_mpo([2, 2, 2], [2, 2, 2], [2, 2], seed=20)
    assert merge_leading_cores(m, 1) is m
    full = merge_leading_cores(m, 3)
    assert full.num_cores == 1
    assert np.allclose(contract_to_matrix(full), contract_to_matrix(m),
                       atol=1e-13)


def test_merge_preserves_contraction():
    m = random_mpo([2, 3, 2], [3, 2, 2], [4, 3], seed=21)
    assert rel_err(contract_to_matrix(merge_leading_cores(m, 2)),
                   contract_to_matrix(m)) <= 1e-14


def test_merge_count_out_of_range():
    m = random_mpo([2, 2], [2, 2], [2], seed=22)
    with pytest.raises(ValueError):
        merge_leading_cores(m, 0)
    with pytest.raises(ValueError):
        merge_leading_cores(m, 3)


# -- subspace iteration -------------------------------------------------------

def test_subspace_identity_operator_q0():
    a = identity_mpo([4, 2, 2])
    o = random_unit_rank_mpo([4, 2, 2], 4, seed=23)
    q = subspace_iteration(a, o, q=0, round_tol=None)
    qmat = contract_to_matrix(q)
    omat = contract_to_matrix(o)
    assert np.linalg.norm(qmat.T @ qmat - np.eye(4)) <= 1e-12
    assert np.linalg.norm(qmat @ (qmat.T @ omat) - omat) <= 1e-12 * \
        np.linalg.norm(omat)


def test_subspace_captures_known_rank(rng):
    # a has true rank 5 < K = 8: the sketch must annihilate the rest
    dense = rng.standard_normal((32, 5)) @ rng.standard_normal((5, 32))
    a = mpo_from_dense(dense, [2] * 5, [2] * 5, 1e-14)
    am = merge_leading_cores(a, 3)
    o = random_unit_rank_mpo(am.col_dims, 8, seed=24)
    q = subspace_iteration(am, o, q=1, round_tol=1e-12)
    s = np.linalg.svd(contract_to_matrix(q).T @ dense, compute_uv=False)
    assert np.all(s[5:] <= 1e-10 * s[0])


def test_subspace_rejects_negative_q():
    a = identity_mpo([4, 2])
    o = random_unit_rank_mpo([4, 2], 2, seed=25)
    with pytest.raises(ValueError):
        subspace_iteration(a, o, q=-1)


# -- the driver ---------------------------------------------------------------

def test_tnrsvd_identity():
    lr = tnrsvd(identity_mpo([2, 2, 2, 2]), 4, q=1, round_tol=1e-12, seed=26)
    assert np.allclose(lr.s, np.ones(4), atol=1e-12)
    assert lr.k_target == 4 and lr.k_oversampled == 8


def test_tnrsvd_orthogonality_invariants():
    a = random_mpo([4, 2, 2, 2], [4, 2, 2, 2], [3, 3, 3], seed=27)
    lr = tnrsvd(a, 5, q=1, round_tol=1e-12, seed=28)
    u = contract_to_matrix(lr.u)
    v = contract_to_matrix(lr.v)
    assert np.linalg.norm(u.T @ u - np.eye(5)) <= 1e-12
    assert np.linalg.norm(v.T @ v - np.eye(5)) <= 1e-12
    assert np.all(np.diff(lr.s) <= 0) and np.all(lr.s >= 0)


def test_tnrsvd_matches_dense_oracle():
    a = random_mpo([4, 2, 2], [4, 2, 2], [2, 2], seed=29)
    dense = contract_to_matrix(a)
    lr = tnrsvd(a, 4, q=2, round_tol=1e-13, seed=30)
    want = np.linalg.svd(dense, compute_uv=False)[:4]
    assert np.all(np.abs(lr.s - want) <= 1e-10 * want[0])


def test_tnrsvd_determinism():
    a = random_mpo([4, 2, 2], [4, 2, 2], [3, 2], seed=31)
    s1 = tnrsvd(a, 3, q=1, seed=7).s
    s2 = tnrsvd(a, 3, q=1, seed=7).s
    s3 = tnrsvd(a, 3, q=1, seed=8).s
    assert np.array_equal(s1, s2)
    assert not np.array_equal(s1, s3)


def test_tnrsvd_sign_convention():
    a = random_mpo([4, 2, 2], [4, 2, 2], [2, 2], seed=32)
    lr = tnrsvd(a, 3, q=1, round_tol=1e-12, seed=33)
    rec = reconstruct_matrix(lr)
    top = np.linalg.svd(contract_to_matrix(a), compute_uv=False)
    # reconstruction only keeps the top-3 share of the spectrum
    resid = rel_err(rec, contract_to_matrix(a))
    floor = np.linalg.norm(top[3:]) / np.linalg.norm(top)
    assert resid <= floor * 1.0001 + 1e-12


def test_tnrsvd_infeasible_sketch():
    with pytest.raises(ValueError):
        tnrsvd(identity_mpo([2, 2]), 4, q=0)


def test_tnrsvd_low_rank_reconstruction():
    # exact recovery when the matrix rank is below the target
    u = random_unit_rank_mpo([8, 2, 2], 3, seed=34)
    vt = random_unit_rank_mpo([8, 2, 2], 3, seed=35)
    from mposvd.rsvd import mpo_transpose
    a = mpo_matmul(u, mpo_transpose(vt))
    dense = contract_to_matrix(a)
    lr = tnrsvd(a, 3, q=2, round_tol=1e-13, seed=36)
    assert rel_err(reconstruct_matrix(lr), dense) <= 1e-11
