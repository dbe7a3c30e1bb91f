"""Dense d-way tensors with a first-index-fastest flat layout.

Everything else in the package is defined against (and verified with) the
index algebra in this module.  The linearization convention is fixed once:
the entry at 1-based indices (i1, ..., id) of a tensor with extents
(I1, ..., Id) lives at flat position

    i1 + sum_{k=2..d} (ik - 1) * I1 * ... * I_{k-1}

i.e. the first index runs fastest.  This is numpy's ``order='F'``.
"""

from __future__ import annotations

from math import prod

import numpy as np

__all__ = [
    "DenseTensor",
    "multi_index",
    "split_index",
    "reshape",
    "matricize",
    "kron",
    "outer",
    "mode_product",
]


class DenseTensor:
    """A d-way array stored as a flat float64 vector, first index fastest.

    ``dims`` may be empty, in which case the tensor is a scalar holding a
    single data element.  All public index arguments are 1-based.
    """

    __slots__ = ("data", "dims")

    def __init__(self, data, dims):
        dims = tuple(int(n) for n in dims)
        if any(n < 1 for n in dims):
            raise ValueError(f"extents must be >= 1, got {dims}")
        data = np.ascontiguousarray(data, dtype=np.float64).reshape(-1)
        if data.size != prod(dims):
            raise ValueError(
                f"data length {data.size} does not match dims {dims}"
            )
        self.data = data
        self.dims = dims

    @classmethod
    def from_array(cls, arr) -> "DenseTensor":
        """Wrap an ndarray, flattening it first-index-fastest."""
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr.reshape(-1, order="F"), arr.shape)

    def to_array(self) -> np.ndarray:
        """The dims-shaped ndarray view of the data (0-d for scalars)."""
        return self.data.reshape(self.dims, order="F")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.data.size

    def copy(self) -> "DenseTensor":
        return DenseTensor(self.data.copy(), self.dims)

    def __repr__(self):
        return f"DenseTensor(dims={self.dims})"


def multi_index(indices, dims) -> int:
    """Linearize 1-based indices into the 1-based flat position."""
    if len(indices) != len(dims):
        raise ValueError(
            f"got {len(indices)} indices for {len(dims)} dimensions"
        )
    pos = 1
    stride = 1
    for i, n in zip(indices, dims):
        if not 1 <= i <= n:
            raise IndexError(f"index {i} out of range [1, {n}]")
        pos += (i - 1) * stride
        stride *= n
    return pos


def split_index(index, dims) -> list[int]:
    """Inverse of :func:`multi_index`: recover the 1-based index tuple."""
    total = prod(dims)
    if not 1 <= index <= total:
        raise IndexError(f"flat index {index} out of range [1, {total}]")
    rem = index - 1
    out = []
    for n in dims:
        rem, r = divmod(rem, n)
        out.append(r + 1)
    return out


def reshape(t: DenseTensor, new_dims) -> DenseTensor:
    """Regroup indices; the flat data is untouched."""
    new_dims = tuple(int(n) for n in new_dims)
    if prod(new_dims) != t.size:
        raise ValueError(f"cannot reshape {t.dims} into {new_dims}")
    return DenseTensor(t.data, new_dims)


def matricize(t: DenseTensor, mode: int) -> DenseTensor:
    """Mode-n unfolding: row index i_n, columns over the remaining indices.

    Mode 1 is identical to reshaping into (I1, prod of the rest).
    """
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range [1, {t.order}]")
    moved = np.moveaxis(t.to_array(), mode - 1, 0)
    mat = moved.reshape(t.dims[mode - 1], -1, order="F")
    return DenseTensor.from_array(mat)


def _pad_to_order(t: DenseTensor, d: int) -> DenseTensor:
    # trailing singleton extents keep the flat data unchanged
    return reshape(t, t.dims + (1,) * (d - t.order))


def kron(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Kronecker product; result extents are the elementwise products.

    Entry at combined indices ([j1 i1], ..., [jd id]) is A(i...) * B(j...),
    so for matrices this is the ordinary Kronecker product A (x) B.
    Operands of different order are padded with trailing unit extents.
    """
    d = max(a.order, b.order)
    a = _pad_to_order(a, d)
    b = _pad_to_order(b, d)
    return DenseTensor.from_array(np.kron(a.to_array(), b.to_array()))


def outer(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Outer product: D(i..., j...) = A(i...) * B(j...)."""
    return DenseTensor.from_array(
        np.multiply.outer(a.to_array(), b.to_array())
    )


def mode_product(t: DenseTensor, m: DenseTensor, mode: int) -> DenseTensor:
    """Contract mode n of ``t`` with a matrix or vector ``m``.

    A matrix M of extents (R, In) replaces extent In of the mode with R,
    summing over M's second index.  A vector of extent In contracts the
    mode away entirely.
    """
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range [1, {t.order}]")
    arr = t.to_array()
    if m.order == 2:
        if m.dims[1] != t.dims[mode - 1]:
            raise ValueError(
                f"matrix contracts extent {m.dims[1]}, "
                f"mode has {t.dims[mode - 1]}"
            )
        out = np.tensordot(m.to_array(), arr, axes=(1, mode - 1))
        out = np.moveaxis(out, 0, mode - 1)
    elif m.order == 1:
        if m.dims[0] != t.dims[mode - 1]:
            raise ValueError(
                f"vector has extent {m.dims[0]}, mode has {t.dims[mode - 1]}"
            )
        out = np.tensordot(arr, m.to_array(), axes=(mode - 1, 0))
    else:
        raise ValueError("mode_product expects a 2-way or 1-way operand")
    return DenseTensor.from_array(out)
