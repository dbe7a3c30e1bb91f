"""Partition planning for block-wise matrix-to-MPO conversion.

A partition plan factors the row and column counts of a matrix into equal
numbers of integer factors (I1, ..., Id) and (J1, ..., Jd).  Level 1 is the
block size; levels 2..d address the grid of blocks.  The factor ordering
drives the attainable MPO-rank bounds, so the planner orders prime factors
in a descending sequence by default (which also gives the first core the
large extents the randomized SVD needs).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

__all__ = ["PartitionPlan", "prime_factorize", "plan_partition", "next_pow2"]


def prime_factorize(n: int) -> list[int]:
    """Prime factors of n in ascending order (1 -> empty list)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    factors = []
    m = n
    p = 2
    while p * p <= m:
        while m % p == 0:
            factors.append(p)
            m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        factors.append(m)
    return factors


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class PartitionPlan:
    """Row/column factor sequences of equal length d >= 1."""

    row_factors: tuple[int, ...]
    col_factors: tuple[int, ...]

    def __post_init__(self):
        rf = tuple(int(n) for n in self.row_factors)
        cf = tuple(int(n) for n in self.col_factors)
        object.__setattr__(self, "row_factors", rf)
        object.__setattr__(self, "col_factors", cf)
        if len(rf) != len(cf) or not rf:
            raise ValueError("factor lists must be non-empty and equal length")
        if any(n < 1 for n in rf + cf):
            raise ValueError("factors must be >= 1")

    @property
    def d(self) -> int:
        return len(self.row_factors)

    @property
    def rows(self) -> int:
        return prod(self.row_factors)

    @property
    def cols(self) -> int:
        return prod(self.col_factors)

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.row_factors[0], self.col_factors[0]


def _descending(rows, cols):
    rf = sorted(prime_factorize(rows), reverse=True)
    cf = sorted(prime_factorize(cols), reverse=True)
    d = max(len(rf), len(cf), 1)
    rf += [1] * (d - len(rf))
    cf += [1] * (d - len(cf))
    return rf, cf


def _target_block(rows, cols, i1, j1):
    if i1 < 1 or j1 < 1 or i1 > rows or j1 > cols:
        raise ValueError(f"block size {i1}x{j1} infeasible for {rows}x{cols}")
    # pad to the nearest power of two when the block does not tile exactly
    if rows % i1:
        rows = next_pow2(rows)
        if rows % i1:
            raise ValueError(f"block rows {i1} do not divide {rows}")
    if cols % j1:
        cols = next_pow2(cols)
        if cols % j1:
            raise ValueError(f"block cols {j1} do not divide {cols}")
    rf = [i1] + sorted(prime_factorize(rows // i1), reverse=True)
    cf = [j1] + sorted(prime_factorize(cols // j1), reverse=True)
    d = max(len(rf), len(cf))
    rf += [1] * (d - len(rf))
    cf += [1] * (d - len(cf))
    return rf, cf


def plan_partition(rows: int, cols: int, strategy="descending",
                   pad: bool = False) -> PartitionPlan:
    """Build a partition plan for a rows x cols matrix.

    ``strategy`` is one of

    * ``"descending"`` -- prime factors of each dimension sorted
      non-increasing, the shorter list padded with trailing 1s;
    * ``"<I1>x<J1>"`` -- a target block size, e.g. ``"256x256"``; the
      remaining factors are the descending prime factors of rows/I1 and
      cols/J1 (dimensions are padded to the next power of two when the
      block does not tile them exactly);
    * a pair ``(row_factors, col_factors)`` of explicit factor lists,
      which must multiply out to the exact dimensions.

    ``pad=True`` rounds both dimensions up to the next power of two before
    factorizing (explicit plans are never padded).  A plan whose products
    exceed the actual matrix dimensions means the matrix is implicitly
    zero-padded during conversion.
    """
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    if isinstance(strategy, str) and strategy != "descending":
        try:
            i1, j1 = (int(s) for s in strategy.lower().split("x"))
        except ValueError:
            raise ValueError(f"unrecognized plan strategy {strategy!r}") from None
        strategy = ("block", i1, j1)
    if not isinstance(strategy, str):
        first = strategy[0] if len(strategy) else None
        if first == "block":
            _, i1, j1 = strategy
            rf, cf = _target_block(rows, cols, i1, j1)
            return PartitionPlan(tuple(rf), tuple(cf))
        rf, cf = strategy
        plan = PartitionPlan(tuple(rf), tuple(cf))
        if plan.rows != rows or plan.cols != cols:
            raise ValueError(
                f"explicit plan {plan.row_factors}x{plan.col_factors} "
                f"inconsistent with {rows}x{cols}"
            )
        return plan
    if pad:
        rows, cols = next_pow2(rows), next_pow2(cols)
    rf, cf = _descending(rows, cols)
    return PartitionPlan(tuple(rf), tuple(cf))
