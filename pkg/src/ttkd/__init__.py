"""Tensor-train approximation of Koopman/transfer-operator spectra from
trajectory data: exact, streamed, and cross-approximated (HOCUR) builds of
transformed data tensors, with AMUSE-style reduced solvers for EDMD and CCA.
"""

from .amuset import (
    SpectralResult,
    TrajectoryPair,
    amuse_dense,
    amuset_cca,
    amuset_edmd,
    assign_two_state,
    cca_dense,
    empirical_subspace_convergence,
    implied_timescales,
)
from .basis import (
    BasisDimension,
    BasisFunction,
    BasisSpec,
    StreamedBuild,
    constant,
    dense_transform,
    eval_basis_dim,
    gaussian,
    gaussian_grid_spec,
    identity,
    monomial,
    periodic_gaussian,
    transform_exact,
    transform_streamed,
)
from .dynamics import (
    FlowConfig,
    SdeConfig,
    abc_rhs,
    generate_abc_dataset,
    integrate,
    simulate_double_well,
)
from .hocur import (
    HocurConfig,
    eval_subtensor,
    extend_column_set,
    extend_row_set,
    hocur_transform,
    independent_columns,
    maxvol,
)
from .tensor import (
    DenseTensor,
    fold,
    multi_to_single,
    single_to_multi,
    subspace_distance,
    unfold,
)
from .tt import (
    GlobalSVD,
    TensorTrain,
    global_svd,
    left_orthonormalize,
    segment_gram,
    segment_to_matrix,
    tt_entry,
    tt_from_dense,
    tt_to_dense,
)

__version__ = "0.1.0"
