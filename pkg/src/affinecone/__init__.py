"""Affine jump-diffusions on the cone of positive semidefinite matrices.

Tools for conservative subcritical affine processes: parameter
validation, generalized Riccati flows with closed-form cross-checks,
first-moment formulas, the stationary law through its Laplace
transform, certified exponential convergence bounds, and reproducible
Monte Carlo verification.
"""

__version__ = "0.1.0"

from .ergodicity import (
    DecayCertificate,
    GateReport,
    HypothesisViolatedError,
    InvariantLaw,
    NotSubcriticalError,
    dL_bound,
    dL_distance,
    dL_table,
    decay_certificate,
    invariant_laplace,
    invariant_mean,
    log_moment_gate,
    spectral_abscissa,
    standard_u_grid,
    transient_laplace,
    transient_mean,
    w1_mean_gap_check,
)
from .params import (
    AdmissibilityError,
    AffineParams,
    LinearDrift,
    MatrixJumpMeasure,
    ScalarJumpMeasure,
    SymOperator,
    ValidationReport,
    is_subdominant_psd,
    load_params,
)
from .riccati import (
    RiccatiTrajectory,
    SolverFailureError,
    WishartSpec,
    congruence_integral,
    phi_closed_form_mbajd,
    psi_closed_form_wishart,
    riccati_DF,
    riccati_DR,
    riccati_F,
    riccati_R,
    semiflow_check,
    solve_riccati,
)
from .simulate import (
    PathEnsemble,
    PathFailureError,
    SimConfig,
    ergodic_sweep,
    mc_mean,
    mc_vs_formula,
    simulate,
)
from .symcone import (
    ConeViolationError,
    check_cone,
    frobenius,
    inner,
    is_psd,
    mat_exp,
    min_eigval,
    project_psd,
    psd_tol,
    random_psd,
    sqrt_psd,
    sym_basis,
    sym_dim,
    symmetrize,
    trace_norm_bracket,
    unvectorize,
    vectorize,
)

__all__ = [
    "__version__",
    "AdmissibilityError",
    "AffineParams",
    "ConeViolationError",
    "DecayCertificate",
    "GateReport",
    "HypothesisViolatedError",
    "InvariantLaw",
    "LinearDrift",
    "MatrixJumpMeasure",
    "NotSubcriticalError",
    "PathEnsemble",
    "PathFailureError",
    "RiccatiTrajectory",
    "ScalarJumpMeasure",
    "SimConfig",
    "SolverFailureError",
    "SymOperator",
    "ValidationReport",
    "WishartSpec",
    "check_cone",
    "congruence_integral",
    "dL_bound",
    "dL_distance",
    "dL_table",
    "decay_certificate",
    "ergodic_sweep",
    "frobenius",
    "inner",
    "invariant_laplace",
    "invariant_mean",
    "is_psd",
    "is_subdominant_psd",
    "load_params",
    "log_moment_gate",
    "mat_exp",
    "mc_mean",
    "mc_vs_formula",
    "min_eigval",
    "phi_closed_form_mbajd",
    "project_psd",
    "psd_tol",
    "psi_closed_form_wishart",
    "random_psd",
    "riccati_DF",
    "riccati_DR",
    "riccati_F",
    "riccati_R",
    "semiflow_check",
    "simulate",
    "solve_riccati",
    "spectral_abscissa",
    "sqrt_psd",
    "standard_u_grid",
    "sym_basis",
    "sym_dim",
    "symmetrize",
    "trace_norm_bracket",
    "transient_laplace",
    "transient_mean",
    "unvectorize",
    "vectorize",
    "w1_mean_gap_check",
]
