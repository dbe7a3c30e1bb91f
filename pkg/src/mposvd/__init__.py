"""MPO linear algebra: block-wise sparse conversion and randomized SVD."""

from .dense import (
    DenseTensor,
    kron,
    matricize,
    mode_product,
    multi_index,
    outer,
    reshape,
    split_index,
)
from .mpo import (
    Mpo,
    SparseCore,
    contract_to_matrix,
    identity_mpo,
    load_mpo,
    mpo_add,
    mpo_from_dense,
    mpo_norm,
    mpo_round,
    mpo_transpose,
    random_mpo,
    random_unit_rank_mpo,
    rank_upper_bounds,
    save_mpo,
    zero_mpo,
)
from .partition import PartitionPlan, plan_partition, prime_factorize
from .rsvd import (
    LowRankSvd,
    merge_leading_cores,
    mpo_matmul,
    mpo_qr,
    mpo_svd,
    reconstruct_matrix,
    subspace_iteration,
    tnrsvd,
)
from .sparse import (
    SparseMatrixCoo,
    bandwidth,
    cuthill_mckee,
    matrix_to_mpo,
    min_rank_lower_bound,
    permute,
    read_matrix_market,
    write_matrix_market,
)

__version__ = "0.1.0"
