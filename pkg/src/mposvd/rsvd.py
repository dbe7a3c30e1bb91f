"""Randomized low-rank SVD computed entirely in MPO form.

The pipeline mirrors the classic randomized SVD: sketch the range with a
random matrix, orthogonalize, optionally sharpen the spectrum with power
iterations on A A^T, project, and take a small dense SVD.  Every matrix
stays in MPO form; the only dense objects are the K x K coupling factors.
The random sketch is a unit-rank MPO whose first core carries all K
columns, so multiplying it onto A preserves A's ranks, and the thin
QR/economical SVD are single right-to-left sweeps over the cores (no
iterative optimization).

Rank truncation is fused into the orthogonalization sweeps: a left-to-right
QR pass first, then the right-to-left sweep truncates each bond within the
rounding budget while producing the orthogonal factors, so no bond is swept
twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .mpo import (
    Mpo,
    _truncation_rank,
    mpo_transpose,
    random_unit_rank_mpo,
)

__all__ = [
    "LowRankSvd",
    "mpo_matmul",
    "merge_leading_cores",
    "mpo_qr",
    "mpo_svd",
    "subspace_iteration",
    "tnrsvd",
    "reconstruct_matrix",
]

DEFAULT_ROUND_TOL = 1e-9


@dataclass
class LowRankSvd:
    """Rank-k_target factorization U diag(s) V^T with MPO factors.

    ``u`` and ``v`` are tall MPOs whose first cores carry the k_target
    column index; both have orthonormal columns.  ``s`` is non-increasing
    and nonnegative.  ``k_oversampled`` is the sketch width actually used.
    """

    u: Mpo
    s: np.ndarray
    v: Mpo
    k_target: int
    k_oversampled: int


def mpo_matmul(a: Mpo, o: Mpo) -> Mpo:
    """Matrix product of two MPOs by per-core contraction of the shared
    column/row index; interior ranks multiply pairwise."""
    if a.num_cores != o.num_cores:
        raise ValueError("operands must have the same number of cores")
    if a.col_dims != o.row_dims:
        raise ValueError(
            f"inner dims differ per core: {a.col_dims} vs {o.row_dims}"
        )
    a = a.densify()
    o = o.densify()
    cores = []
    for ca, co in zip(a.cores, o.cores):
        Ra, I, J, Sa = ca.shape
        Rc, _, K, Sc = co.shape
        n = np.einsum("aijb,cjkd->acikbd", ca, co)
        cores.append(n.reshape(Ra * Rc, I, K, Sa * Sc, order="F"))
    return Mpo(cores)


def merge_leading_cores(m: Mpo, count: int) -> Mpo:
    """Contract the first ``count`` cores into one; the representation is
    unchanged.  count = 1 is the identity, count = num_cores collapses the
    whole chain into a single core."""
    if not 1 <= count <= m.num_cores:
        raise ValueError(f"count {count} out of range [1, {m.num_cores}]")
    if count == 1:
        return m
    m = m.densify()
    T = m.cores[0]
    for core in m.cores[1:count]:
        _, A, B, R = T.shape
        _, I, J, S = core.shape
        N = T.reshape(A * B, R, order="F") @ core.reshape(R, I * J * S,
                                                          order="F")
        N = N.reshape(A, B, I, J, S, order="F").transpose(0, 2, 1, 3, 4)
        T = N.reshape(1, A * I, B * J, S, order="F")
    return Mpo([T] + list(m.cores[count:]))


def _orthogonalize_left_to_right(cores):
    """QR sweep leaving every core but the last left-orthogonal."""
    for k in range(len(cores) - 1):
        R, I, J, S = cores[k].shape
        Q, Rm = np.linalg.qr(cores[k].reshape(R * I * J, S, order="F"))
        cores[k] = Q.reshape(R, I, J, Q.shape[1], order="F")
        cores[k + 1] = np.tensordot(Rm, cores[k + 1], axes=(1, 0))


def _sweep_right_to_left(cores, round_tol):
    """Make cores 2..d rows-orthonormal, absorbing factors leftward.

    With a rounding tolerance the factorization is a truncated SVD per
    bond (budget split evenly over the bonds); otherwise an exact RQ.
    """
    d = len(cores)
    if d == 1:
        return
    delta = 0.0
    if round_tol is not None:
        _orthogonalize_left_to_right(cores)
        delta = round_tol * np.linalg.norm(cores[-1]) / sqrt(d - 1)
    for k in range(d - 1, 0, -1):
        R, I, J, S = cores[k].shape
        M = cores[k].reshape(R, I * J * S, order="F")
        if round_tol is not None:
            U, s, Vh = np.linalg.svd(M, full_matrices=False)
            r = _truncation_rank(s, delta, round_tol)
            Qi, carry = Vh[:r], U[:, :r] * s[:r]
        else:
            Qt, Rt = np.linalg.qr(M.T)
            Qi, carry = Qt.T, Rt.T
            r = Qi.shape[0]
        cores[k] = Qi.reshape(r, I, J, S, order="F")
        cores[k - 1] = np.tensordot(cores[k - 1], carry, axes=(3, 0))


def mpo_qr(y: Mpo, round_tol: float | None = None) -> tuple[Mpo, np.ndarray]:
    """Thin QR of a tall matrix in MPO form.

    The first core must be 1 x I1 x K x R2 with I1 >= K.  Returns the MPO
    of Q (same core extents, Q^T Q = I_K) and the dense K x K factor with
    Q R = Y (exactly without rounding, within the budget with it).  The
    dominant cost is the orthogonal-triangular factorization of the first
    core's K x I1*R2 unfolding, roughly O(I1^2 R2^2 K) flops.
    """
    c0 = y.cores[0]
    _, I1, K, _ = c0.shape
    if I1 < K:
        raise ValueError(
            f"first core has I1 = {I1} < K = {K}; merge leading cores first"
        )
    y = y.densify()
    cores = [c.copy() for c in y.cores]
    _sweep_right_to_left(cores, round_tol)
    _, I1, K, R2 = cores[0].shape
    B = (cores[0].reshape(I1, K, R2, order="F").transpose(1, 0, 2)
         .reshape(K, I1 * R2, order="F"))
    Qt, Rt = np.linalg.qr(B.T)
    Q1 = (Qt.T.reshape(K, I1, R2, order="F").transpose(1, 0, 2)
          .reshape(1, I1, K, R2, order="F"))
    cores[0] = Q1
    # B's row index K is the represented matrix's *column* index, so the
    # factorization B = Rt^T Qt^T contracts as Y = Q Rt.
    return Mpo(cores), Rt


def mpo_svd(b: Mpo,
            round_tol: float | None = None) -> tuple[np.ndarray, np.ndarray, Mpo]:
    """Economical SVD of a short-and-wide matrix in MPO form.

    The first core must be 1 x K x J1 x R2 with J1 >= K.  Returns the
    orthogonal K x K factor W, the K non-increasing singular values, and a
    tall MPO V (first core 1 x J1 x K x R2) with orthonormal columns such
    that W diag(s) contract(V)^T reconstructs the input.
    """
    c0 = b.cores[0]
    _, K, J1, _ = c0.shape
    if J1 < K:
        raise ValueError(
            f"first core has J1 = {J1} < K = {K}; merge leading cores first"
        )
    b = b.densify()
    cores = [c.copy() for c in b.cores]
    _sweep_right_to_left(cores, round_tol)
    _, K, J1, R2 = cores[0].shape
    M = cores[0].reshape(K, J1 * R2, order="F")
    W, s, Q1h = np.linalg.svd(M, full_matrices=False)
    cores[0] = Q1h.reshape(K, J1, R2, order="F").reshape(1, K, J1, R2,
                                                         order="F")
    v_tall = mpo_transpose(Mpo(cores))
    return W, s, v_tall


def subspace_iteration(a: Mpo, o: Mpo, q: int = 2,
                       round_tol: float | None = DEFAULT_ROUND_TOL) -> Mpo:
    """Orthonormal basis capturing the range of A, sharpened by q power
    iterations.

    Each half-iteration multiplies, rounds at ``round_tol`` and
    re-orthogonalizes through :func:`mpo_qr`; skipping the intermediate
    orthogonalizations would let round-off wash out the small singular
    directions.  The caller must ensure the leading row and column extents
    of ``a`` cover the sketch width (merge leading cores first).
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    qm, _ = mpo_qr(mpo_matmul(a, o), round_tol)
    at = mpo_transpose(a)
    for _ in range(q):
        qm, _ = mpo_qr(mpo_matmul(at, qm), round_tol)
        qm, _ = mpo_qr(mpo_matmul(a, qm), round_tol)
    return qm


def tnrsvd(a: Mpo, k_target: int, q: int = 2,
           round_tol: float | None = DEFAULT_ROUND_TOL,
           oversample: float = 2.0, seed=None) -> LowRankSvd:
    """Randomized rank-``k_target`` SVD of a matrix in MPO form.

    Sketch width K = ceil(oversample * k_target) (at least k_target);
    leading cores are merged automatically so the first row and column
    extents reach K.  After the subspace iteration, B = Q^T A is reduced
    by the economical MPO-SVD and U = Q W is formed on Q's first core (a
    mode product with W^T); only the leading k_target triplets are kept.
    Sign convention: the first nonzero coefficient of each retained column
    of W is made nonnegative, flipping the matching column of V.

    Deterministic for a fixed seed.  ``q`` trades accuracy for time; 1 or
    2 suffices for quickly decaying spectra, slower decay wants more.
    """
    if k_target < 1:
        raise ValueError("k_target must be >= 1")
    K = max(k_target, int(np.ceil(oversample * k_target)))
    row_cum = np.cumprod(a.row_dims)
    col_cum = np.cumprod(a.col_dims)
    feasible = np.where((row_cum >= K) & (col_cum >= K))[0]
    if feasible.size == 0:
        raise ValueError(
            f"matrix {a.num_rows}x{a.num_cols} cannot host a width-{K} sketch"
        )
    am = merge_leading_cores(a.densify(), int(feasible[0]) + 1)
    o = random_unit_rank_mpo(am.col_dims, K, seed)
    qm = subspace_iteration(am, o, q, round_tol)
    b = mpo_matmul(mpo_transpose(qm), am)
    w, s, v = mpo_svd(b, round_tol)
    u_cores = [c.copy() for c in qm.cores]
    u_cores[0] = np.einsum("xikr,kl->xilr", u_cores[0], w)
    v_cores = [c.copy() for c in v.cores]
    for kk in range(k_target):
        nz = np.nonzero(w[:, kk])[0]
        if nz.size and w[nz[0], kk] < 0:
            u_cores[0][:, :, kk, :] *= -1.0
            v_cores[0][:, :, kk, :] *= -1.0
    u_cores[0] = np.ascontiguousarray(u_cores[0][:, :, :k_target, :])
    v_cores[0] = np.ascontiguousarray(v_cores[0][:, :, :k_target, :])
    return LowRankSvd(u=Mpo(u_cores), s=s[:k_target].copy(), v=Mpo(v_cores),
                      k_target=k_target, k_oversampled=K)


def reconstruct_matrix(lr: LowRankSvd, guard: int | None = None) -> np.ndarray:
    """Densify U diag(s) V^T (desk-scale verification helper)."""
    from .mpo import CONTRACT_GUARD, contract_to_matrix

    g = CONTRACT_GUARD if guard is None else guard
    u = contract_to_matrix(lr.u, g)
    v = contract_to_matrix(lr.v, g)
    return (u * lr.s) @ v.T
