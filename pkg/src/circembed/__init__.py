"""circembed: exact sampling of stationary Gaussian random fields on
uniform grids via circulant embedding and FFT diagonalization, with
positive-definiteness criteria, eigenvalue bounds and decay diagnostics.
"""

__version__ = "0.1.0"

from .analysis import (
    BoundConstants,
    DecayReport,
    OrderedLattice,
    PdCriterionResult,
    calibrate_constants,
    continuous_eigenvalue,
    decay_report,
    gaussian_ell_bound,
    lattice_ordering,
    matern_ell_bound,
    pd_criterion,
    qmc_criterion_sum,
    sampling_theorem_check,
)
from .embedding import (
    Embedding,
    GridSpec,
    Spectrum,
    eigen_lower_bound_diagnostic,
    first_column,
    minimal_embedding,
    phi,
    rho_ext,
    spectrum,
)
from .errors import (
    CapabilityError,
    CircembedError,
    ConvergenceError,
    NotPositiveDefiniteError,
    QuadratureError,
    SymmetryError,
)
from .kernels import (
    CustomStationaryKernel,
    MaternKernel,
    covariance_tail_integral,
    gaussian_kernel,
    spectral_tail_integral,
)
from .sampler import (
    FieldSample,
    batch_sample,
    batch_sample_values,
    draw_normal,
    importance_ordering,
    qmc_map,
    sample,
)
from .specialfn import bessel_k, gamma, inv_normal_cdf, log_gamma
from .validation import ValidationReport, dense_covariance, validate_samples

__all__ = [
    "__version__",
    "BoundConstants", "DecayReport", "OrderedLattice", "PdCriterionResult",
    "calibrate_constants", "continuous_eigenvalue", "decay_report",
    "gaussian_ell_bound", "lattice_ordering", "matern_ell_bound",
    "pd_criterion", "qmc_criterion_sum", "sampling_theorem_check",
    "Embedding", "GridSpec", "Spectrum", "eigen_lower_bound_diagnostic",
    "first_column", "minimal_embedding", "phi", "rho_ext", "spectrum",
    "CapabilityError", "CircembedError", "ConvergenceError",
    "NotPositiveDefiniteError", "QuadratureError", "SymmetryError",
    "CustomStationaryKernel", "MaternKernel", "covariance_tail_integral",
    "gaussian_kernel", "spectral_tail_integral",
    "FieldSample", "batch_sample", "batch_sample_values", "draw_normal",
    "importance_ordering", "qmc_map", "sample",
    "bessel_k", "gamma", "inv_normal_cdf", "log_gamma",
    "ValidationReport", "dense_covariance", "validate_samples",
]
