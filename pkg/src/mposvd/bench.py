"""Benchmark harness: experiment matrices and CSV reporting.

Two families of test matrices are generated here.  The Hilbert family is
the rectangular submatrix H(:, 1:2^(N-1)) of the 2^N x 2^N Hilbert matrix
H(i, j) = 1 / (i + j - 1), built densely at desk scale and converted with
the TT-SVD baseline (relative error 1e-11 by default; its MPO ranks stay
in the low twenties).  The prescribed-spectrum family is built entirely in
MPO form and never densified: random column-orthonormal factors U, V are
obtained by orthogonalizing a sum of three independent unit-rank random
MPOs, and A = U diag(spectrum) V^T with the spectrum absorbed into U's
first core.

The power-iteration count is a free parameter.  For the Hilbert runs q = 2
serves up to N = 30, with 3 and 4 used for N = 35..40 and N = 45..50; the
prescribed-spectrum runs use q = 1 with per-N rounding tolerances from
``SPECTRUM_ROUND_TOLS``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from statistics import median

import numpy as np

from .mpo import Mpo, contract_to_matrix, mpo_from_dense, mpo_round, mpo_add, \
    random_unit_rank_mpo
from .partition import plan_partition
from .rsvd import mpo_matmul, mpo_qr, mpo_transpose, reconstruct_matrix, tnrsvd
from .sparse import matrix_to_mpo, random_sparse_coo

__all__ = [
    "BenchRecord",
    "CSV_HEADER",
    "write_csv",
    "hilbert_submatrix",
    "gen_hilbert_mpo",
    "default_spectrum",
    "gen_prescribed_spectrum_mpo",
    "SPECTRUM_ROUND_TOLS",
    "spectrum_round_tol",
    "run_hilbert_bench",
    "run_spectrum_bench",
    "run_convert_bench",
]

CSV_HEADER = "experiment,N,k,q,tol,seconds,rel_error,max_rank"

# per-N rounding tolerances for the prescribed-spectrum runs
SPECTRUM_ROUND_TOLS = {
    10: 1e-5, 15: 1e-6, 20: 1e-8, 25: 1e-8, 30: 1e-9,
    35: 1e-10, 40: 1e-11, 45: 1e-12, 50: 1e-13,
}


@dataclass
class BenchRecord:
    experiment: str
    n: int
    k: int
    q: int
    tol: float
    seconds: float
    rel_error: float
    max_rank: int

    def __post_init__(self):
        if self.seconds < 0 or self.rel_error < 0:
            raise ValueError("seconds and rel_error must be nonnegative")

    def csv_row(self) -> str:
        return (f"{self.experiment},{self.n},{self.k},{self.q},"
                f"{self.tol:g},{self.seconds:.6g},{self.rel_error:.6g},"
                f"{self.max_rank}")


def write_csv(records, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(CSV_HEADER + "\n")
        for r in records:
            f.write(r.csv_row() + "\n")


def hilbert_submatrix(n: int) -> np.ndarray:
    """The dense 2^n x 2^(n-1) matrix with entries 1 / (i + j - 1)."""
    if not 1 <= n <= 14:
        raise ValueError("dense construction supports 1 <= n <= 14")
    rows = np.arange(1, 2 ** n + 1)
    cols = np.arange(1, 2 ** (n - 1) + 1)
    return 1.0 / (rows[:, None] + cols[None, :] - 1.0)


def gen_hilbert_mpo(n: int, rel_tol: float = 1e-11) -> Mpo:
    """Hilbert submatrix as an MPO of n cores (all extents 2, last column
    extent 1), accurate to ``rel_tol``.  Desk scale only: 10 <= n <= 14."""
    if not 10 <= n <= 14:
        raise ValueError(f"n = {n} outside the desk-scale range [10, 14]")
    dense = hilbert_submatrix(n)
    return mpo_from_dense(dense, [2] * n, [2] * (n - 1) + [1], rel_tol)


def default_spectrum(count: int = 50) -> np.ndarray:
    return 0.5 ** np.arange(count)


def gen_prescribed_spectrum_mpo(n: int, spectrum=None,
                                seed=None) -> tuple[Mpo, Mpo, Mpo]:
    """A 2^n x 2^n matrix with the given singular values, built in MPO form.

    Returns (a, u, v) with a = U diag(spectrum) V^T; u and v are tall
    column-orthonormal MPOs (defect around 1e-14).  The leading core
    extent is the smallest power of two holding len(spectrum) columns, so
    nothing here is ever densified.
    """
    spectrum = np.asarray(default_spectrum() if spectrum is None else spectrum,
                          dtype=np.float64).reshape(-1)
    k = spectrum.size
    lead_pow = max(int(np.ceil(np.log2(k))), 1)
    if 2 ** n < 2 * (1 << lead_pow):
        raise ValueError(
            f"2^{n} is too small for {k} prescribed values plus oversampling"
        )
    dims = [1 << lead_pow] + [2] * (n - lead_pow)
    rng = np.random.default_rng(seed)

    def orthonormal_factor() -> Mpo:
        m = random_unit_rank_mpo(dims, k, rng)
        for _ in range(2):
            m = mpo_add(m, random_unit_rank_mpo(dims, k, rng))
        q, _ = mpo_qr(mpo_round(m, 1e-14))
        return q

    u = orthonormal_factor()
    v = orthonormal_factor()
    scaled = [c.copy() for c in u.cores]
    scaled[0] = scaled[0] * spectrum[None, None, :, None]
    a = mpo_matmul(Mpo(scaled), mpo_transpose(v))
    return a, u, v


def spectrum_round_tol(n: int) -> float:
    """Rounding tolerance for a prescribed-spectrum run (nearest table N)."""
    nearest = min(SPECTRUM_ROUND_TOLS, key=lambda m: (abs(m - n), m))
    return SPECTRUM_ROUND_TOLS[nearest]


def _timed(fn, repeats: int):
    """Median wall time over ``repeats`` runs; returns (result, seconds)."""
    times, result = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, median(times)


def run_hilbert_bench(ns, k_target: int = 16, q: int = 2,
                      round_tol: float = 1e-9, seed: int = 0,
                      repeats: int = 3, mpo_tol: float = 1e-11):
    """Rank-k approximations of Hilbert submatrices; the reported error is
    the dense relative residual |A - U S V^T|_F / |A|_F."""
    records = []
    for n in ns:
        a = gen_hilbert_mpo(n, mpo_tol)
        lr, secs = _timed(
            lambda: tnrsvd(a, k_target, q=q, round_tol=round_tol, seed=seed),
            repeats)
        dense = hilbert_submatrix(n)
        rel = (np.linalg.norm(dense - reconstruct_matrix(lr))
               / np.linalg.norm(dense))
        records.append(BenchRecord("hilbert", n, k_target, q, round_tol,
                                   secs, rel, a.max_rank))
    return records


def run_spectrum_bench(ns, k_target: int = 50, q: int = 1, seed: int = 0,
                       repeats: int = 3):
    """Prescribed-spectrum recovery, entirely in MPO form; the reported
    error is |S - S_hat|_F / |S|_F on the leading k_target values."""
    records = []
    spectrum = default_spectrum(k_target)
    for n in ns:
        tol = spectrum_round_tol(n)
        a, _, _ = gen_prescribed_spectrum_mpo(
            n, spectrum, seed=np.random.default_rng([seed, n, 0]))
        lr, secs = _timed(
            lambda: tnrsvd(a, k_target, q=q, round_tol=tol,
                           seed=np.random.default_rng([seed, n, 1])),
            repeats)
        rel = np.linalg.norm(spectrum - lr.s) / np.linalg.norm(spectrum)
        records.append(BenchRecord("spectrum", n, k_target, q, tol, secs,
                                   rel, a.max_rank))
    return records


def run_convert_bench(size: int = 4096, density: float = 0.01, seed: int = 0,
                      repeats: int = 3, with_ttsvd: bool = False):
    """Block-wise conversion of a random sparse matrix (descending plan,
    power-of-two padding), reporting the round-trip relative error; with
    ``with_ttsvd`` a TT-SVD baseline row is appended."""
    a = random_sparse_coo(size, size, density, seed)
    plan = plan_partition(size, size, "descending", pad=True)
    m, secs = _timed(lambda: matrix_to_mpo(a, plan), repeats)
    dense = np.zeros((plan.rows, plan.cols))
    dense[:size, :size] = a.to_dense()
    rel = (np.linalg.norm(contract_to_matrix(m) - dense)
           / np.linalg.norm(dense))
    records = [BenchRecord("convert", size, 0, 0, 0.0, secs, rel, m.max_rank)]
    if with_ttsvd:
        mt, tsecs = _timed(
            lambda: mpo_from_dense(dense, plan.row_factors, plan.col_factors,
                                   1e-14),
            1)
        trel = (np.linalg.norm(contract_to_matrix(mt) - dense)
                / np.linalg.norm(dense))
        records.append(BenchRecord("ttsvd", size, 0, 0, 1e-14, tsecs, trel,
                                   mt.max_rank))
    return records
