"""Optimal portfolio holdings under fat-tailed elliptical return distributions.

Computes the negative-exponential-utility optimum for returns drawn from the
Generalized Error family (Normal and Laplace as analytic fast paths), and
verifies every analytic result against brute-force expected-utility oracles.
"""

from .allocation import (
    AllocationReport,
    DegenerateConstraintError,
    RiskConfig,
    critical_root_laplace,
    critical_root_numeric,
    holding_elliptical_numeric,
    holding_gaussian,
    holding_markowitz_constrained,
    holding_mv_laplace,
    holding_uv_laplace,
    taylor_check_uv,
)
from .distributions import (
    DistributionSpec,
    ReturnSample,
    cov_from_scale,
    cov_scale_factor,
    eta,
    ged_logpdf,
    ged_pdf,
    mv_laplace_pdf,
    sample_mv_laplace,
    scale_from_cov,
    uv_laplace_pdf,
)
from .mathcore import (
    NonConvergenceError,
    NotPositiveDefiniteError,
    QuadratureResult,
    SpdMatrix,
    bessel_i,
    bessel_i_scaled,
    integrate_semi_infinite,
    mahalanobis_sq,
    solve_spd,
)
from .oracle import (
    DivergenceError,
    ScanPoint,
    UtilityEstimate,
    argmin_omega_uv,
    expected_utility_mc,
    omega_objective_uv,
    scan_optimum_ray,
    verify_optimality_scan,
)
from .scaling import (
    PsiQuery,
    laplace_integral_denominator,
    laplace_integral_numerator,
    omega_asymptote,
    omega_conjectured,
    omega_laplace,
    omega_large_n_limit,
    psi_laplace,
    psi_numeric,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationReport",
    "DegenerateConstraintError",
    "DistributionSpec",
    "DivergenceError",
    "NonConvergenceError",
    "NotPositiveDefiniteError",
    "PsiQuery",
    "QuadratureResult",
    "ReturnSample",
    "RiskConfig",
    "ScanPoint",
    "SpdMatrix",
    "UtilityEstimate",
    "argmin_omega_uv",
    "bessel_i",
    "bessel_i_scaled",
    "cov_from_scale",
    "cov_scale_factor",
    "critical_root_laplace",
    "critical_root_numeric",
    "eta",
    "expected_utility_mc",
    "ged_logpdf",
    "ged_pdf",
    "holding_elliptical_numeric",
    "holding_gaussian",
    "holding_markowitz_constrained",
    "holding_mv_laplace",
    "holding_uv_laplace",
    "integrate_semi_infinite",
    "laplace_integral_denominator",
    "laplace_integral_numerator",
    "mahalanobis_sq",
    "mv_laplace_pdf",
    "omega_asymptote",
    "omega_conjectured",
    "omega_laplace",
    "omega_large_n_limit",
    "omega_objective_uv",
    "psi_laplace",
    "psi_numeric",
    "sample_mv_laplace",
    "scale_from_cov",
    "scan_optimum_ray",
    "solve_spd",
    "taylor_check_uv",
    "uv_laplace_pdf",
    "verify_optimality_scan",
]
