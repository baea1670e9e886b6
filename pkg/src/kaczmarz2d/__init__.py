"""One- and two-row Kaczmarz-family solvers for consistent linear systems.

The package bundles matrix-free row operators (dense, CSR, implicit
Kronecker), seeded row/pair sampling, twelve row-action iterations behind one
``solve`` dispatch, an sklearn-compatible estimator facade, the benchmark
problem generators, and a command-line experiment harness.
"""

from .estimator import KaczmarzSolver
from .images import error_norm, image_to_vec, psnr, read_pgm, ssim, vec_to_image, write_pgm
from .mmio import MatrixMarketError, load_matrix_market, save_matrix_market
from .operators import (
    DenseMatrix,
    DiagnosticsCapError,
    KroneckerOperator,
    RowOperator,
    SparseRowMatrix,
    as_row_operator,
    gram_spectrum_small,
)
from .problems import BlurModel, TrigPolyProblem, build_blur, gen_gaussian, gen_trig_poly, phantom
from .sampling import (
    DegenerateSampleError,
    PairDistribution,
    build_pair_distribution,
    cross_product_sq,
    make_rng,
    sample_pair,
    sample_pair_within,
    simple_random_sample,
    weighted_index,
)
from .solvers import (
    METHODS,
    DivergenceError,
    LinearSystem,
    SolveReport,
    SolverConfig,
    cyclic_pair,
    gtrk_update,
    least_norm_oracle,
    project_two_rows,
    single_row_update,
    solve,
    theory_factors,
    validate_system,
)

__version__ = "0.1.0"

__all__ = [
    "KaczmarzSolver",
    "DenseMatrix",
    "SparseRowMatrix",
    "KroneckerOperator",
    "RowOperator",
    "as_row_operator",
    "gram_spectrum_small",
    "DiagnosticsCapError",
    "LinearSystem",
    "SolverConfig",
    "SolveReport",
    "DivergenceError",
    "METHODS",
    "solve",
    "validate_system",
    "single_row_update",
    "project_two_rows",
    "gtrk_update",
    "cyclic_pair",
    "least_norm_oracle",
    "theory_factors",
    "make_rng",
    "cross_product_sq",
    "PairDistribution",
    "build_pair_distribution",
    "sample_pair",
    "sample_pair_within",
    "simple_random_sample",
    "weighted_index",
    "DegenerateSampleError",
    "TrigPolyProblem",
    "BlurModel",
    "gen_trig_poly",
    "gen_gaussian",
    "build_blur",
    "phantom",
    "psnr",
    "ssim",
    "error_norm",
    "image_to_vec",
    "vec_to_image",
    "read_pgm",
    "write_pgm",
    "load_matrix_market",
    "save_matrix_market",
    "MatrixMarketError",
]
