"""Matrix product operators: the data structure and its algebra.

An MPO is an ordered chain of 4-way cores; core k has extents
(R_k, I_k, J_k, R_{k+1}) with boundary ranks R_1 = R_{d+1} = 1 and adjacent
ranks matching.  The represented matrix has prod(I_k) rows and prod(J_k)
columns; its entry at row multi-index [i1...id] and column multi-index
[j1...jd] (first index fastest) is the product of the rank-index matrix
slices, last core leftmost.  A unit-rank MPO therefore contracts to the
Kronecker product of its core slices in reversed core order.

Cores are numpy arrays, or :class:`SparseCore` when only a few entries are
populated.  Block-wise conversion of a large sparse matrix produces cores
that are almost entirely zeros, so keeping them sparse is what makes the
conversion memory-bounded by the nonzero count; everything that genuinely
needs dense cores densifies behind a size guard.

Serialized file layout (stable):

* bytes 0-3: magic ``b"MPO1"``
* bytes 4-7: little-endian uint32 header length ``H``
* ``H`` bytes: UTF-8 JSON object with keys ``format`` (1), ``num_cores``,
  ``row_dims``, ``col_dims``, ``ranks`` (length num_cores + 1)
* per core, in order: float64 little-endian flat data, first index fastest.
"""

from __future__ import annotations

import json
import struct
from math import prod, sqrt

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Mpo",
    "SparseCore",
    "contract_to_matrix",
    "mpo_add",
    "mpo_round",
    "mpo_from_dense",
    "mpo_transpose",
    "mpo_norm",
    "random_unit_rank_mpo",
    "random_mpo",
    "identity_mpo",
    "zero_mpo",
    "rank_upper_bounds",
    "save_mpo",
    "load_mpo",
    "CONTRACT_GUARD",
    "DENSIFY_GUARD",
]

# largest matrix (in entries) contract_to_matrix will materialize
CONTRACT_GUARD = 1 << 26
# largest total dense-core footprint (in entries) densify() accepts
DENSIFY_GUARD = 1 << 24

_MAGIC = b"MPO1"


class SparseCore:
    """A 4-way MPO core holding only its explicitly nonzero entries.

    Stored as parallel COO index arrays (left rank, row, col, right rank)
    plus values; coordinates are 0-based and must be duplicate-free.
    """

    __slots__ = ("shape", "left", "row", "col", "right", "values")

    def __init__(self, shape, left, row, col, right, values):
        self.shape = tuple(int(n) for n in shape)
        if len(self.shape) != 4 or any(n < 1 for n in self.shape):
            raise ValueError(f"bad core shape {shape}")
        self.left = np.asarray(left, dtype=np.int64).reshape(-1)
        self.row = np.asarray(row, dtype=np.int64).reshape(-1)
        self.col = np.asarray(col, dtype=np.int64).reshape(-1)
        self.right = np.asarray(right, dtype=np.int64).reshape(-1)
        self.values = np.asarray(values, dtype=np.float64).reshape(-1)

    @property
    def nnz(self) -> int:
        return self.values.size

    @property
    def size(self) -> int:
        return prod(self.shape)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.add.at(out, (self.left, self.row, self.col, self.right), self.values)
        return out

    def transpose(self) -> "SparseCore":
        R, I, J, S = self.shape
        return SparseCore((R, J, I, S), self.left, self.col, self.row,
                          self.right, self.values)

    def unfold_sparse(self) -> sp.coo_matrix:
        """The (R, I*J*S) unfolding with column index i + I*j + I*J*s."""
        R, I, J, S = self.shape
        cols = self.row + I * (self.col + J * self.right)
        return sp.coo_matrix((self.values, (self.left, cols)),
                             shape=(R, I * J * S))

    def __repr__(self):
        return f"SparseCore(shape={self.shape}, nnz={self.nnz})"


def _core_shape(core):
    return core.shape


def _dense_core(core) -> np.ndarray:
    return core.to_dense() if isinstance(core, SparseCore) else core


class Mpo:
    """An ordered chain of 4-way MPO cores with unit boundary ranks."""

    __slots__ = ("cores",)

    def __init__(self, cores):
        cores = list(cores)
        if not cores:
            raise ValueError("an MPO needs at least one core")
        checked = []
        for k, c in enumerate(cores):
            if not isinstance(c, SparseCore):
                c = np.asarray(c, dtype=np.float64)
                if c.ndim != 4:
                    raise ValueError(f"core {k} is {c.ndim}-way, expected 4")
                if any(n < 1 for n in c.shape):
                    raise ValueError(f"core {k} has empty extent {c.shape}")
            checked.append(c)
        if checked[0].shape[0] != 1 or checked[-1].shape[3] != 1:
            raise ValueError("boundary ranks must be 1")
        for k in range(len(checked) - 1):
            if checked[k].shape[3] != checked[k + 1].shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{checked[k].shape[3]} vs {checked[k + 1].shape[0]}"
                )
        self.cores = checked

    @property
    def num_cores(self) -> int:
        return len(self.cores)

    @property
    def row_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def col_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """(R_1, ..., R_{d+1}) including the unit boundary ranks."""
        return tuple(c.shape[0] for c in self.cores) + (1,)

    @property
    def num_rows(self) -> int:
        return prod(self.row_dims)

    @property
    def num_cols(self) -> int:
        return prod(self.col_dims)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def is_sparse(self) -> bool:
        return any(isinstance(c, SparseCore) for c in self.cores)

    def copy(self) -> "Mpo":
        return Mpo([c if isinstance(c, SparseCore) else c.copy()
                    for c in self.cores])

    def densify(self, limit: int | None = DENSIFY_GUARD) -> "Mpo":
        """Return an equivalent MPO with plain ndarray cores.

        Refuses when the dense footprint would exceed ``limit`` entries.
        """
        if not self.is_sparse:
            return self
        total = sum(prod(c.shape) for c in self.cores)
        if limit is not None and total > limit:
            raise ValueError(
                f"densifying needs {total} entries (> {limit}); "
                "round the MPO or raise the limit"
            )
        return Mpo([_dense_core(c) for c in self.cores])

    def __add__(self, other):
        return mpo_add(self, other)

    def __repr__(self):
        return (f"Mpo(d={self.num_cores}, shape={self.num_rows}x"
                f"{self.num_cols}, ranks={list(self.ranks)})")


def _check_same_grid(a: Mpo, b: Mpo):
    if a.num_cores != b.num_cores:
        raise ValueError(f"core counts differ: {a.num_cores} vs {b.num_cores}")
    if a.row_dims != b.row_dims or a.col_dims != b.col_dims:
        raise ValueError("per-core row/col extents differ")


def contract_to_matrix(m: Mpo, guard: int = CONTRACT_GUARD) -> np.ndarray:
    """Materialize the matrix an MPO represents.

    Refuses outputs above ``guard`` entries.  Sparse-core chains are
    contracted with sparse matrix products, so conversion outputs of large
    sparse matrices stay cheap; the result is always a dense 2-d array.
    """
    rows, cols = m.num_rows, m.num_cols
    if rows * cols > guard:
        raise ValueError(
            f"contraction would create {rows}x{cols} entries (> {guard})"
        )
    if m.is_sparse:
        return _contract_sparse(m)
    c0 = m.cores[0]
    A, B, r = c0.shape[1], c0.shape[2], c0.shape[3]
    T = c0.reshape(A, B, r, order="F")
    for core in m.cores[1:]:
        R, I, J, S = core.shape
        N = T.reshape(A * B, R, order="F") @ core.reshape(R, I * J * S,
                                                          order="F")
        N = N.reshape(A, B, I, J, S, order="F").transpose(0, 2, 1, 3, 4)
        A, B = A * I, B * J
        T = N.reshape(A, B, S, order="F")
    return T.reshape(A, B, order="F")


def _contract_sparse(m: Mpo) -> np.ndarray:
    M = sp.csr_matrix(np.ones((1, 1)))
    rows_p = cols_p = 1
    for core in m.cores:
        R, I, J, S = _core_shape(core)
        if isinstance(core, SparseCore):
            B = core.unfold_sparse().tocsr()
        else:
            B = sp.csr_matrix(core.reshape(R, I * J * S, order="F"))
        N = (M @ B).tocoo()
        p, q = N.row.astype(np.int64), N.col.astype(np.int64)
        rb, cb = p % rows_p, p // rows_p
        i = q % I
        t = q // I
        j, s = t % J, t // J
        new_p = (rb + rows_p * i) + rows_p * I * (cb + cols_p * j)
        rows_p *= I
        cols_p *= J
        M = sp.coo_matrix((N.data, (new_p, s)),
                          shape=(rows_p * cols_p, S)).tocsr()
    return M.toarray().reshape(rows_p, cols_p, order="F")


def mpo_add(a: Mpo, b: Mpo) -> Mpo:
    """Sum of two MPOs over the same index grid.

    Interior ranks add (block-diagonal core stacking); boundary cores are
    stacked along their single interior rank axis so R_1 = R_{d+1} = 1
    is preserved.
    """
    _check_same_grid(a, b)
    a = a.densify()
    b = b.densify()
    d = a.num_cores
    if d == 1:
        return Mpo([a.cores[0] + b.cores[0]])
    cores = []
    for k, (ca, cb) in enumerate(zip(a.cores, b.cores)):
        Ra, I, J, Sa = ca.shape
        Rb, _, _, Sb = cb.shape
        R = 1 if k == 0 else Ra + Rb
        S = 1 if k == d - 1 else Sa + Sb
        c = np.zeros((R, I, J, S))
        if k == 0:
            c[:, :, :, :Sa] = ca
            c[:, :, :, Sa:] = cb
        elif k == d - 1:
            c[:Ra] = ca
            c[Ra:] = cb
        else:
            c[:Ra, :, :, :Sa] = ca
            c[Ra:, :, :, Sa:] = cb
        cores.append(c)
    return Mpo(cores)


def _truncation_rank(s: np.ndarray, delta: float, rel_tol: float) -> int:
    """Smallest kept rank whose discarded tail of squared singular values
    stays within delta**2 (ties toward the smaller rank); with rel_tol
    exactly 0 only exact zeros are discarded."""
    if rel_tol == 0.0:
        return max(int(np.count_nonzero(s)), 1)
    tail = np.concatenate([np.cumsum((s * s)[::-1])[::-1], [0.0]])
    return max(int(np.argmax(tail <= delta * delta)), 1)


def mpo_norm(m: Mpo) -> float:
    """Frobenius norm via the core-wise self-contraction recurrence.

    Never materializes the matrix; cost is O(d * R^3 * I * J) with a
    transfer matrix of size R x R per bond.
    """
    G = np.ones((1, 1))
    for core in m.cores:
        c = _dense_core(core)
        if G.shape[0] * c.size > CONTRACT_GUARD:
            raise ValueError("MPO ranks too large for the norm recurrence")
        T = np.tensordot(G, c, axes=(0, 0))          # (b, i, j, r)
        G = np.tensordot(T, c, axes=([0, 1, 2], [0, 1, 2]))
    return float(sqrt(max(G[0, 0], 0.0)))


def mpo_round(m: Mpo, rel_tol: float) -> Mpo:
    """Truncate MPO ranks within a relative Frobenius error budget.

    Left-to-right QR orthogonalization sweep, then a right-to-left SVD
    truncation sweep with per-bond budget delta = rel_tol * |m|_F /
    sqrt(d - 1); the result satisfies |A - A_rounded|_F <= rel_tol * |A|_F
    and no rank ever increases.  rel_tol = 0 removes only exact rank
    deficiencies.  Guarantees are per call; repeated rounding inside an
    iterative algorithm accumulates its own error.
    """
    if rel_tol < 0:
        raise ValueError("rel_tol must be >= 0")
    d = m.num_cores
    dense = m.densify()
    if d == 1:
        return dense.copy()
    cores = [c.copy() for c in dense.cores]
    for k in range(d - 1):
        R, I, J, S = cores[k].shape
        Q, Rm = np.linalg.qr(cores[k].reshape(R * I * J, S, order="F"))
        cores[k] = Q.reshape(R, I, J, Q.shape[1], order="F")
        cores[k + 1] = np.tensordot(Rm, cores[k + 1], axes=(1, 0))
    delta = rel_tol * np.linalg.norm(cores[-1]) / sqrt(d - 1)
    for k in range(d - 1, 0, -1):
        R, I, J, S = cores[k].shape
        U, s, Vh = np.linalg.svd(cores[k].reshape(R, I * J * S, order="F"),
                                 full_matrices=False)
        r = _truncation_rank(s, delta, rel_tol)
        cores[k] = Vh[:r].reshape(r, I, J, S, order="F")
        cores[k - 1] = np.tensordot(cores[k - 1], U[:, :r] * s[:r],
                                    axes=(3, 0))
    return Mpo(cores)


def mpo_from_dense(a, row_factors, col_factors, rel_tol: float = 0.0) -> Mpo:
    """Convert a dense matrix to an MPO by successive SVDs (TT-SVD).

    The factor sequences must multiply out to the matrix dimensions
    exactly.  Round-trip error is bounded by rel_tol * |a|_F and the
    resulting ranks respect the canonical upper bounds
    min(prod_{i<k} I_i J_i, prod_{i>=k} I_i J_i).

    This is the package's conversion baseline and verification oracle; the
    block-wise sparse conversion lives in :mod:`mposvd.sparse` and is
    checked against it.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-way array")
    rf = tuple(int(n) for n in row_factors)
    cf = tuple(int(n) for n in col_factors)
    if len(rf) != len(cf):
        raise ValueError("factor lists must have equal length")
    if prod(rf) != a.shape[0] or prod(cf) != a.shape[1]:
        raise ValueError(
            f"plan {rf}x{cf} does not factor a {a.shape[0]}x{a.shape[1]} matrix"
        )
    d = len(rf)
    if d == 1:
        return Mpo([a.reshape(1, rf[0], cf[0], 1, order="F")])
    delta = rel_tol * np.linalg.norm(a) / sqrt(d - 1)
    arr = a.reshape(rf + cf, order="F")
    perm = [ax for k in range(d) for ax in (k, d + k)]
    arr = arr.transpose(perm)
    cores = []
    r_prev = 1
    M = arr.reshape(r_prev * rf[0] * cf[0], -1, order="F")
    for k in range(d - 1):
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
        r = _truncation_rank(s, delta, rel_tol)
        cores.append(U[:, :r].reshape(r_prev, rf[k], cf[k], r, order="F"))
        M = s[:r, None] * Vh[:r]
        r_prev = r
        if k + 1 < d - 1:
            M = M.reshape(r_prev * rf[k + 1] * cf[k + 1], -1, order="F")
    cores.append(M.reshape(r_prev, rf[-1], cf[-1], 1, order="F"))
    return Mpo(cores)


def mpo_transpose(m: Mpo) -> Mpo:
    """Swap the row and column axis of every core (matrix transpose)."""
    cores = []
    for c in m.cores:
        if isinstance(c, SparseCore):
            cores.append(c.transpose())
        else:
            cores.append(np.ascontiguousarray(c.transpose(0, 2, 1, 3)))
    return Mpo(cores)


def random_unit_rank_mpo(row_dims, k: int, seed=None) -> Mpo:
    """A random matrix with exactly k columns as a unit-rank MPO.

    The first core carries the full column index (1 x J1 x k x 1); the
    remaining cores are random column vectors (1 x Ji x 1 x 1).  The
    contraction has matrix rank k with probability 1.  Requires
    k <= row_dims[0].  Entries are standard normal; the contracted matrix
    is a product of Gaussians per entry, not itself Gaussian.
    """
    row_dims = [int(n) for n in row_dims]
    if not row_dims or any(n < 1 for n in row_dims):
        raise ValueError(f"bad row dims {row_dims}")
    if not 1 <= k <= row_dims[0]:
        raise ValueError(
            f"k = {k} exceeds the leading extent {row_dims[0]}; "
            "merge leading cores first"
        )
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((1, row_dims[0], k, 1))]
    cores += [rng.standard_normal((1, n, 1, 1)) for n in row_dims[1:]]
    return Mpo(cores)


def random_mpo(row_dims, col_dims, interior_ranks, seed=None) -> Mpo:
    """A dense random MPO with the given interior ranks (test helper)."""
    row_dims = [int(n) for n in row_dims]
    col_dims = [int(n) for n in col_dims]
    d = len(row_dims)
    if len(col_dims) != d:
        raise ValueError("row/col dim lists must have equal length")
    ranks = [1] + [int(r) for r in interior_ranks] + [1]
    if len(ranks) != d + 1:
        raise ValueError(f"need {d - 1} interior ranks, got {len(ranks) - 2}")
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((ranks[k], row_dims[k], col_dims[k],
                                  ranks[k + 1])) for k in range(d)]
    return Mpo(cores)


def identity_mpo(dims) -> Mpo:
    """The identity matrix on prod(dims) as a unit-rank MPO."""
    return Mpo([np.eye(int(n)).reshape(1, n, n, 1) for n in dims])


def zero_mpo(row_dims, col_dims) -> Mpo:
    """Canonical all-zero MPO: unit ranks, zero cores."""
    if len(row_dims) != len(col_dims):
        raise ValueError("row/col dim lists must have equal length")
    return Mpo([np.zeros((1, int(i), int(j), 1))
                for i, j in zip(row_dims, col_dims)])


def rank_upper_bounds(row_dims, col_dims) -> list[int]:
    """Canonical rank bounds min(prod_{i<k} IiJi, prod_{i>=k} IiJi)
    for the bonds k = 2..d."""
    row_dims = [int(n) for n in row_dims]
    col_dims = [int(n) for n in col_dims]
    if len(row_dims) != len(col_dims):
        raise ValueError("row/col dim lists must have equal length")
    pairs = [i * j for i, j in zip(row_dims, col_dims)]
    return [min(prod(pairs[:k]), prod(pairs[k:]))
            for k in range(1, len(pairs))]


def save_mpo(m: Mpo, path):
    """Write an MPO to the documented chunked binary/JSON format."""
    m = m.densify()
    header = {
        "format": 1,
        "num_cores": m.num_cores,
        "row_dims": list(m.row_dims),
        "col_dims": list(m.col_dims),
        "ranks": list(m.ranks),
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for core in m.cores:
            f.write(core.reshape(-1, order="F").astype("<f8").tobytes())


def load_mpo(path) -> Mpo:
    """Read an MPO written by :func:`save_mpo`."""
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not an MPO file")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        if header.get("format") != 1:
            raise ValueError(f"unsupported MPO format {header.get('format')}")
        ranks = header["ranks"]
        cores = []
        for k in range(header["num_cores"]):
            shape = (ranks[k], header["row_dims"][k],
                     header["col_dims"][k], ranks[k + 1])
            raw = f.read(prod(shape) * 8)
            if len(raw) != prod(shape) * 8:
                raise ValueError(f"{path}: truncated core data")
            data = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            cores.append(data.reshape(shape, order="F"))
    return Mpo(cores)
