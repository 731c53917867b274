"""Solvers for steady duct flow with fractional-Laplacian turbulent diffusion.

Building blocks: a uniform Dirichlet grid, the matrix-free 5-point Laplacian
with known eigenstructure, an exact spectral oracle, a pseudo-parabolic solver
for fractional powers, preconditioned CG for the two-term problem, the duct
model layer, and calibration against measured velocity profiles.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from .calibrate import (
    CalibrationResult,
    ExperimentalProfile,
    deviation,
    grid_search,
    interpolate_at,
    load_profile,
)
from .duct import (
    DuctModelParams,
    PhysicalParams,
    field_max,
    midline_profile,
    nondimensionalize,
    normalize_field,
    solve_duct,
)
from .errors import (
    ConvergenceError,
    ProfileFormatError,
    SolverError,
    ValidationError,
)
from .fracpower import (
    FracPowerConfig,
    FracPowerTrace,
    frac_power_solve,
    inv_frac_power,
)
from .grid import Grid2D, ScalarField, inner_product, make_grid, norm_D, norm_E
from .laplacian import (
    EigenIndex,
    LaplacianOperator,
    apply_laplacian,
    eigenfunction,
    eigenvalue,
    min_eigenvalue,
    shifted_solve,
)
from .multiterm import (
    CgReport,
    MultiTermProblem,
    apply_multiterm,
    kappa_bound,
    make_problem,
    pcg_solve,
)
from .spectral import (
    SpectralCoefficients,
    analyze,
    frac_apply,
    synthesize,
    two_term_solve_exact,
)

__all__ = [
    "kernel_backend",
    "Grid2D",
    "ScalarField",
    "make_grid",
    "inner_product",
    "norm_E",
    "norm_D",
    "LaplacianOperator",
    "EigenIndex",
    "apply_laplacian",
    "min_eigenvalue",
    "eigenvalue",
    "eigenfunction",
    "shifted_solve",
    "SpectralCoefficients",
    "analyze",
    "synthesize",
    "frac_apply",
    "two_term_solve_exact",
    "FracPowerConfig",
    "FracPowerTrace",
    "inv_frac_power",
    "frac_power_solve",
    "MultiTermProblem",
    "CgReport",
    "make_problem",
    "apply_multiterm",
    "kappa_bound",
    "pcg_solve",
    "DuctModelParams",
    "PhysicalParams",
    "nondimensionalize",
    "solve_duct",
    "midline_profile",
    "field_max",
    "normalize_field",
    "ExperimentalProfile",
    "CalibrationResult",
    "load_profile",
    "interpolate_at",
    "deviation",
    "grid_search",
    "ValidationError",
    "ProfileFormatError",
    "SolverError",
    "ConvergenceError",
]
