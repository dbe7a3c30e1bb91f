"""Block-wise conversion of sparse matrices into MPO form.

A partition plan splits the matrix into a grid of I1 x J1 blocks.  Every
block holding at least one nonzero becomes a unit-rank MPO: its first core
is the block itself, the later cores are selector matrices with a single
one at the block's grid coordinate on that level.  Summing the unit-rank
terms yields an MPO whose interior ranks all equal the nonzero block
count; a rounding step then truncates them toward the canonical values.

The global 0-based row index r decomposes as r = i1 + I1 * b with i1 the
position inside the block and b the block coordinate, whose digits for
levels 2..d are taken level-2-fastest; columns decompose the same way.
This is the unique mapping consistent with the first-index-fastest
multi-index and the reversed core order of Kronecker-product MPOs.
"""

from __future__ import annotations

from math import prod

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .mpo import DENSIFY_GUARD, Mpo, SparseCore, mpo_add, mpo_round, zero_mpo
from .partition import PartitionPlan

__all__ = [
    "SparseMatrixCoo",
    "read_matrix_market",
    "write_matrix_market",
    "bandwidth",
    "cuthill_mckee",
    "permute",
    "invert_permutation",
    "matrix_to_mpo",
    "min_rank_lower_bound",
    "random_sparse_coo",
]


class SparseMatrixCoo:
    """Coordinate-format sparse matrix with 1-based (row, col, value) entries.

    Duplicate coordinates are rejected at construction.  Explicitly stored
    zeros are kept (they survive file round trips) but never count toward
    the nonzero count ``nnz`` or toward nonzero blocks.
    """

    __slots__ = ("rows", "cols", "row", "col", "val")

    def __init__(self, rows, cols, row, col, val):
        self.rows = int(rows)
        self.cols = int(cols)
        if self.rows < 1 or self.cols < 1:
            raise ValueError("matrix dimensions must be >= 1")
        self.row = np.asarray(row, dtype=np.int64).reshape(-1)
        self.col = np.asarray(col, dtype=np.int64).reshape(-1)
        self.val = np.asarray(val, dtype=np.float64).reshape(-1)
        if not (self.row.size == self.col.size == self.val.size):
            raise ValueError("row/col/val arrays must have equal length")
        if self.row.size:
            if self.row.min() < 1 or self.row.max() > self.rows:
                raise ValueError("row index out of range")
            if self.col.min() < 1 or self.col.max() > self.cols:
                raise ValueError("col index out of range")
            keys = (self.row - 1) * self.cols + (self.col - 1)
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate (row, col) entries rejected")

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.val))

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrixCoo":
        arr = np.asarray(arr, dtype=np.float64)
        r, c = np.nonzero(arr)
        return cls(arr.shape[0], arr.shape[1], r + 1, c + 1, arr[r, c])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.row - 1, self.col - 1] = self.val
        return out

    def to_scipy(self) -> sp.coo_matrix:
        return sp.coo_matrix((self.val, (self.row - 1, self.col - 1)),
                             shape=(self.rows, self.cols))

    def __repr__(self):
        return (f"SparseMatrixCoo({self.rows}x{self.cols}, "
                f"nnz={self.nnz})")


def read_matrix_market(path) -> SparseMatrixCoo:
    """Read a Matrix Market coordinate file (symmetric storage expanded)."""
    mat = scipy.io.mmread(path)
    if np.iscomplexobj(mat):
        raise ValueError(f"{path}: complex matrices are not supported")
    if isinstance(mat, np.ndarray):
        return SparseMatrixCoo.from_dense(mat)
    coo = mat.tocoo()
    return SparseMatrixCoo(coo.shape[0], coo.shape[1],
                           coo.row + 1, coo.col + 1, coo.data)


def write_matrix_market(path, a: SparseMatrixCoo):
    """Write entries as ``%%MatrixMarket matrix coordinate real general``."""
    scipy.io.mmwrite(path, a.to_scipy(), symmetry="general")


def bandwidth(a: SparseMatrixCoo) -> int:
    """max |i - j| over stored nonzero entries (0 when there are none)."""
    mask = a.val != 0
    if not mask.any():
        return 0
    return int(np.abs(a.row[mask] - a.col[mask]).max())


def invert_permutation(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.int64)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size, dtype=np.int64)
    return inv


def permute(a: SparseMatrixCoo, row_perm, col_perm) -> SparseMatrixCoo:
    """Apply 0-based gather permutations: B[i, j] = A[row_perm[i], col_perm[j]]."""
    rp = np.asarray(row_perm, dtype=np.int64)
    cp = np.asarray(col_perm, dtype=np.int64)
    if rp.size != a.rows or cp.size != a.cols:
        raise ValueError("permutation length does not match matrix shape")
    inv_r, inv_c = invert_permutation(rp), invert_permutation(cp)
    return SparseMatrixCoo(a.rows, a.cols,
                           inv_r[a.row - 1] + 1, inv_c[a.col - 1] + 1, a.val)


def cuthill_mckee(a: SparseMatrixCoo) -> tuple[np.ndarray, np.ndarray]:
    """Bandwidth-reducing row/column orderings (reverse Cuthill-McKee).

    Square matrices are ordered on the symmetrized pattern of A + A^T with
    row_perm = col_perm; rectangular ones order rows on the A A^T support
    graph and columns on the A^T A support graph.  Returned arrays are
    0-based gather permutations for :func:`permute`.
    """
    pat = a.to_scipy().tocsr()
    pat.data = np.ones_like(pat.data)
    if a.rows == a.cols:
        g = (pat + pat.T).tocsr()
        p = np.asarray(reverse_cuthill_mckee(g, symmetric_mode=True),
                       dtype=np.int64)
        return p, p.copy()
    rows_g = (pat @ pat.T).tocsr()
    cols_g = (pat.T @ pat).tocsr()
    rp = np.asarray(reverse_cuthill_mckee(rows_g, symmetric_mode=True),
                    dtype=np.int64)
    cp = np.asarray(reverse_cuthill_mckee(cols_g, symmetric_mode=True),
                    dtype=np.int64)
    return rp, cp


def min_rank_lower_bound(z: int, i1: int, j1: int) -> int:
    """ceil(z / (I1 * J1)): the fewest I1 x J1 blocks that can hold z
    nonzeros, attained when a permutation aligns them perfectly."""
    if i1 < 1 or j1 < 1:
        raise ValueError("block dimensions must be >= 1")
    if z < 0:
        raise ValueError("nonzero count must be >= 0")
    return -(-z // (i1 * j1))


def _block_coordinates(idx: np.ndarray, extents):
    """Level digits (level-2-fastest) of flat block coordinates."""
    digits = []
    rem = idx.copy()
    for n in extents:
        digits.append(rem % n)
        rem //= n
    return digits


def _build_cores(plan: PartitionPlan, i1, j1, ti, row_digits, col_digits,
                 values, rank):
    """Assemble the sparse cores of the summed unit-rank terms.

    ``ti`` maps each entry to its block id in [0, rank); ``row_digits`` /
    ``col_digits`` give each block's grid coordinate per level.
    """
    d = plan.d
    I1, J1 = plan.block_shape
    cores: list[SparseCore] = [
        SparseCore((1, I1, J1, rank), np.zeros_like(ti), i1, j1, ti, values)
    ]
    t = np.arange(rank, dtype=np.int64)
    ones = np.ones(rank)
    for k in range(1, d):
        left = t
        right = t if k < d - 1 else np.zeros_like(t)
        shape = (rank, plan.row_factors[k], plan.col_factors[k],
                 rank if k < d - 1 else 1)
        cores.append(SparseCore(shape, left, row_digits[k - 1],
                                col_digits[k - 1], right, ones))
    return cores


def matrix_to_mpo(a: SparseMatrixCoo, plan: PartitionPlan,
                  rank_cap: int | None = None,
                  round_tol: float | None = None,
                  densify_limit: int | None = DENSIFY_GUARD) -> Mpo:
    """Convert a sparse matrix into an MPO by summing unit-rank block terms.

    The plan may exceed the matrix dimensions, in which case the matrix is
    implicitly padded with zero rows/columns (padding adds no blocks).
    Without a cap the reconstruction is exact up to float representation
    and all interior ranks equal the nonzero block count; core buffers are
    preallocated at that known final rank.  With ``rank_cap`` set, blocks
    are accumulated in chunks and an intermediate rounding step at
    ``round_tol`` (default 1e-14) fires whenever the accumulated rank
    reaches the cap, which bounds memory at the cost of a slightly larger
    (still near-machine-precision) reconstruction error.

    Cores come back dense when their total footprint fits
    ``densify_limit`` (entries; 0 keeps them sparse, None always
    densifies), else as :class:`~mposvd.mpo.SparseCore` chains.
    """
    if rank_cap is not None and rank_cap < 1:
        raise ValueError("rank_cap must be >= 1")
    I, J = plan.rows, plan.cols
    if I < a.rows or J < a.cols:
        raise ValueError(
            f"plan covers {I}x{J} but the matrix is {a.rows}x{a.cols}"
        )
    mask = a.val != 0
    if not mask.any():
        return zero_mpo(plan.row_factors, plan.col_factors)
    r0 = a.row[mask] - 1
    c0 = a.col[mask] - 1
    values = a.val[mask]
    I1, J1 = plan.block_shape
    i1, br = r0 % I1, r0 // I1
    j1, bc = c0 % J1, c0 // J1
    row_digits = _block_coordinates(br, plan.row_factors[1:])
    col_digits = _block_coordinates(bc, plan.col_factors[1:])
    n_row_blocks = prod(plan.row_factors[1:])
    key = br + n_row_blocks * bc
    uniq, ti = np.unique(key, return_inverse=True)
    rank = uniq.size
    u_row = _block_coordinates(uniq % n_row_blocks, plan.row_factors[1:])
    u_col = _block_coordinates(uniq // n_row_blocks, plan.col_factors[1:])

    if rank_cap is None or rank <= rank_cap or plan.d == 1:
        cores = _build_cores(plan, i1, j1, ti, u_row, u_col, values, rank)
        m = Mpo(cores)
        total = sum(prod(c.shape) for c in cores)
        if densify_limit is None or total <= densify_limit:
            m = m.densify(limit=None)
        return m

    # capped accumulation: chunks of unit-rank terms, rounded on overflow
    tol = 1e-14 if round_tol is None else round_tol
    acc: Mpo | None = None
    for start in range(0, rank, rank_cap):
        stop = min(start + rank_cap, rank)
        pick = np.where((ti >= start) & (ti < stop))[0]
        sub_ti = ti[pick] - start
        sub_rows = [dig[start:stop] for dig in u_row]
        sub_cols = [dig[start:stop] for dig in u_col]
        chunk = Mpo(_build_cores(plan, i1[pick], j1[pick], sub_ti,
                                 sub_rows, sub_cols, values[pick],
                                 stop - start)).densify(limit=None)
        acc = chunk if acc is None else mpo_add(acc, chunk)
        if acc.max_rank >= rank_cap:
            acc = mpo_round(acc, tol)
    return acc


def random_sparse_coo(rows: int, cols: int, density: float,
                      seed=None) -> SparseMatrixCoo:
    """Uniformly scattered standard-normal entries at the given density."""
    rng = np.random.default_rng(seed)
    target = int(round(density * rows * cols))
    target = min(max(target, 0), rows * cols)
    if target == 0:
        return SparseMatrixCoo(rows, cols, [], [], [])
    flat = np.array([], dtype=np.int64)
    while flat.size < target:
        extra = rng.integers(0, rows * cols,
                             size=int(1.2 * (target - flat.size)) + 16)
        flat = np.unique(np.concatenate([flat, extra]))
    flat = rng.permutation(flat)[:target]
    r, c = flat % rows, flat // rows
    return SparseMatrixCoo(rows, cols, r + 1, c + 1,
                           rng.standard_normal(target))
