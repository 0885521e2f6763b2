"""Certified spectral condition-number estimation for large matrices.

The estimator bounds sigma_max by power iteration and hunts sigma_min
with an enhanced LSQR loop on a consistent system with a known solution;
both estimates come with one-sided error guarantees, and the certified
one ships a vector any consumer can verify with a single matvec.
"""

from .bidiag import BidiagonalUpper, SingularBidiagonalError
from .estimator import (
    ConvergenceTrace,
    EstimateResult,
    EstimatorConfig,
    LsqrState,
    StopReason,
    estimate_condition,
    inverse_erf,
    lsqr_init,
    lsqr_state_from_rhs,
    lsqr_step,
)
from .linops import (
    DenseMatrix,
    LinearOperator,
    MatrixMarketError,
    SparseMatrixCsr,
    norm2,
    parse_matrix_market,
    to_matrix_market,
)
from .matgen import (
    GeneratedMatrix,
    Segment,
    SpectrumSpec,
    derive_rng,
    matrix_with_spectrum,
    preset,
    preset_names,
    random_gaussian_vector,
    random_sign_matrix,
    random_unit_vector,
)
from .spectral import (
    SigmaMaxEstimate,
    estimate_sigma_max,
    inverse_power_sigma_min,
    power_iteration_count,
)
from .svd_oracle import (
    JacobiConvergenceError,
    baseline_sigma_min_by_norm,
    jacobi_svd,
    pseudo_inverse_apply,
)

__version__ = "0.1.0"

__all__ = [
    "BidiagonalUpper",
    "ConvergenceTrace",
    "DenseMatrix",
    "EstimateResult",
    "EstimatorConfig",
    "GeneratedMatrix",
    "JacobiConvergenceError",
    "LinearOperator",
    "LsqrState",
    "MatrixMarketError",
    "Segment",
    "SigmaMaxEstimate",
    "SingularBidiagonalError",
    "SparseMatrixCsr",
    "SpectrumSpec",
    "StopReason",
    "baseline_sigma_min_by_norm",
    "derive_rng",
    "estimate_condition",
    "estimate_sigma_max",
    "inverse_erf",
    "inverse_power_sigma_min",
    "jacobi_svd",
    "lsqr_init",
    "lsqr_state_from_rhs",
    "lsqr_step",
    "matrix_with_spectrum",
    "norm2",
    "parse_matrix_market",
    "power_iteration_count",
    "preset",
    "preset_names",
    "pseudo_inverse_apply",
    "random_gaussian_vector",
    "random_sign_matrix",
    "random_unit_vector",
    "to_matrix_market",
]
