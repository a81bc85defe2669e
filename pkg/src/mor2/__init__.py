"""Two-sided low-rank reduction of semilinear matrix differential equations.

Offline: snapshots of the state and of the nonlinearity are compressed by
an incremental two-sided decomposition with adaptive snapshot selection.
Online: the reduced system is integrated with an exponential Euler scheme,
the nonlinearity handled through two-sided interpolation so that no
full-size matrix is ever formed.
"""

from .errors import (
    ConditioningError,
    ConfigError,
    DimensionError,
    DivergenceError,
    FormatError,
    InputError,
    IntegrityError,
    MemoryGuardError,
    Mor2Error,
    RankError,
    SingularityError,
    StructureError,
)
from .kernels import (
    EigenPair,
    SvdTriplet,
    eig_pair,
    etd_euler_update,
    expm_apply,
    phi1,
    pivoted_qr_indices,
    solve_sylvester,
    truncated_svd,
)
from .problems import (
    AnalyticFunction,
    ProblemSpec,
    analytic_function,
    build_problem,
    eval_nonlinear,
    eval_nonlinear_at,
    sample_analytic,
)
from .fullsolve import (
    AnalyticSource,
    ArraySource,
    FullTrajectory,
    SnapshotStream,
    TimeGrid,
    iter_full,
    run_full,
    trajectory_source,
)
from .pod import (
    BasisPair,
    SelectionReport,
    TripletAccumulator,
    VectorBasis,
    accumulate,
    candidate_times,
    dynamic_pod,
    inclusion_error,
    projection_error,
    prune,
    retained_count,
    vanilla_pod,
    vector_pod,
)
from .deim import (
    DeimOperator,
    RomDeimFactors,
    VectorDeim,
    build_deim,
    deim_approximate,
    precompute_rom_factors,
    qdeim_bound,
    reduced_nonlinear,
    vector_deim,
    vector_deim_apply,
)
from .rom import (
    ReducedModel,
    RomTrajectory,
    VectorReducedModel,
    assemble_rom,
    assemble_vector_rom,
    average_error,
    average_error_vector,
    lift,
    run_online,
    run_online_vector,
)
from .persist import read_basis, read_snapshots, write_basis, write_snapshots

__version__ = "0.1.0"

__all__ = [
    "AnalyticFunction",
    "AnalyticSource",
    "ArraySource",
    "BasisPair",
    "ConditioningError",
    "ConfigError",
    "DeimOperator",
    "DimensionError",
    "DivergenceError",
    "EigenPair",
    "FormatError",
    "FullTrajectory",
    "InputError",
    "IntegrityError",
    "MemoryGuardError",
    "Mor2Error",
    "ProblemSpec",
    "RankError",
    "ReducedModel",
    "RomDeimFactors",
    "RomTrajectory",
    "SelectionReport",
    "SingularityError",
    "SnapshotStream",
    "StructureError",
    "SvdTriplet",
    "TimeGrid",
    "TripletAccumulator",
    "VectorBasis",
    "VectorDeim",
    "VectorReducedModel",
    "accumulate",
    "analytic_function",
    "assemble_rom",
    "assemble_vector_rom",
    "average_error",
    "average_error_vector",
    "build_deim",
    "build_problem",
    "candidate_times",
    "deim_approximate",
    "dynamic_pod",
    "eig_pair",
    "etd_euler_update",
    "eval_nonlinear",
    "eval_nonlinear_at",
    "expm_apply",
    "inclusion_error",
    "projection_error",
    "iter_full",
    "lift",
    "phi1",
    "pivoted_qr_indices",
    "precompute_rom_factors",
    "prune",
    "qdeim_bound",
    "read_basis",
    "read_snapshots",
    "reduced_nonlinear",
    "retained_count",
    "run_full",
    "run_online",
    "run_online_vector",
    "sample_analytic",
    "solve_sylvester",
    "trajectory_source",
    "truncated_svd",
    "vanilla_pod",
    "vector_deim",
    "vector_deim_apply",
    "vector_pod",
    "write_basis",
    "write_snapshots",
]
