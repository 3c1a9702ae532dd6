"""Critical-root solvers and the holding functions.

A holding function maps conditional return moments (alpha and a scale or
covariance matrix) to the optimal position vector of a negative-exponential
utility maximizer. The Laplace and Normal cases have closed forms; the
general GED case goes through one-dimensional root finding on the scaling
function.

Convention: the Gaussian baseline is h = V^{-1} alpha / lambda, i.e. the
shrinkage multiplier Omega is reported on the scale where Omega(0) = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import cov_scale_factor
from .mathcore import NonConvergenceError, SpdMatrix, mahalanobis_sq, solve_spd
from .scaling import (
    SQRT2,
    SQRT2_GUARD_BAND,
    PsiQuery,
    omega_laplace,
    psi_numeric,
)

__all__ = [
    "DegenerateConstraintError",
    "RiskConfig",
    "AllocationReport",
    "critical_root_laplace",
    "critical_root_numeric",
    "holding_uv_laplace",
    "holding_mv_laplace",
    "holding_elliptical_numeric",
    "holding_gaussian",
    "holding_markowitz_constrained",
    "taylor_check_uv",
]


class DegenerateConstraintError(ValueError):
    """The fully-invested portfolio is undefined (1^T V^{-1} alpha ~ 0)."""


@dataclass(frozen=True)
class RiskConfig:
    """Price of risk: the rate at which expected profit buys profit variance."""

    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


@dataclass(frozen=True)
class AllocationReport:
    """Holdings plus the diagnostics that produced them.

    z_cov is the alpha Z-score under the covariance matrix V, z_scale the
    same quadratic form under the density scale matrix Sigma. For Laplace
    methods z_scale^2 = (n+1)/2 * z_cov^2 and the critical root lies in
    [0, sqrt(2)).
    """

    holdings: np.ndarray
    z_cov: float
    z_scale: float
    critical_root: float
    omega: float
    method: str

    def __post_init__(self) -> None:
        if not (self.z_cov >= 0 and self.z_scale >= 0):
            raise ValueError("Z-scores must be non-negative")
        if not self.critical_root >= 0:
            raise ValueError("critical root must be non-negative")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


def critical_root_laplace(n: int, z_scale: float) -> float:
    """Closed-form critical root at kappa = 1.

    Stable form 4 z' / (sqrt((n+1)^2 + 8 z'^2) + (n+1)); equals 0 at z' = 0
    and approaches sqrt(2) from below as z' grows.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not z_scale >= 0:
        raise ValueError(f"z_scale must be non-negative, got {z_scale}")
    m = n + 1.0
    return 4.0 * z_scale / (math.sqrt(m * m + 8.0 * z_scale * z_scale) + m)


def critical_root_numeric(
    n: int, z_scale: float, kappa: float, tol: float = 1e-10
) -> float:
    """Solve x * Psi_{n/2}(x) = z' by bracketing and bisection.

    x * Psi is monotone increasing, so a sign-changing bracket pins the
    root; the bracket grows geometrically toward the sqrt(2) pole when
    kappa = 1 and doubles upward otherwise. Terminates when the residual
    |x Psi(x) - z'| drops below tol * max(1, z').
    """
    if not z_scale >= 0:
        raise ValueError(f"z_scale must be non-negative, got {z_scale}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if z_scale == 0.0:
        return 0.0
    nu = 0.5 * n
    quad_tol = max(1e-12, tol * 1e-2)

    def f(x: float) -> float:
        return x * psi_numeric(PsiQuery(nu, x, kappa), quad_tol) - z_scale

    f_tol = tol * max(1.0, z_scale)
    lo, f_lo = 0.0, -z_scale
    if kappa == 1.0:
        hi = 0.5 * SQRT2
        f_hi = f(hi)
        while f_hi < 0.0:
            gap = SQRT2 - hi
            if gap <= 2.0 * SQRT2_GUARD_BAND:
                raise NonConvergenceError(
                    f"z_scale={z_scale} is unreachable inside the sqrt(2) guard band"
                )
            lo, f_lo = hi, f_hi
            hi = SQRT2 - 0.5 * gap
            f_hi = f(hi)
    else:
        hi = 1.0
        f_hi = f(hi)
        for _ in range(200):
            if f_hi >= 0.0:
                break
            lo, f_lo = hi, f_hi
            hi *= 2.0
            f_hi = f(hi)
        else:
            raise NonConvergenceError("failed to bracket the critical root")

    for _ in range(300):
        if abs(f_hi) <= f_tol:
            return hi
        if abs(f_lo) <= f_tol and lo > 0.0:
            return lo
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = f(mid)
        if abs(f_mid) <= f_tol:
            return mid
        if f_mid < 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise NonConvergenceError("critical-root bisection exhausted its budget")


def holding_uv_laplace(alpha: float, sigma: float, risk: RiskConfig) -> float:
    """Optimal single-asset position under the classical Laplace law.

    (sqrt(1 + a^2/s^2) - 1)/(lambda a), computed in the cancellation-free
    form a / (lambda s^2 (sqrt(1 + a^2/s^2) + 1)); sigma is the scale of
    the variance-2s^2 parameterization.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    t = alpha / sigma
    return alpha / (risk.lam * sigma * sigma * (math.sqrt(1.0 + t * t) + 1.0))


def holding_mv_laplace(
    alpha: np.ndarray, v: SpdMatrix, risk: RiskConfig
) -> AllocationReport:
    """Exact multivariate Laplace holding h = V^{-1} alpha * Omega_n(Z) / (2 lambda)."""
    alpha = np.asarray(alpha, dtype=float)
    n = v.dimension
    if alpha.shape != (n,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({n},)")
    z = math.sqrt(mahalanobis_sq(alpha, v))
    z_scale = z * math.sqrt(0.5 * (n + 1.0))
    omega = omega_laplace(n, z)
    holdings = solve_spd(v, alpha) * (omega / (2.0 * risk.lam))
    return AllocationReport(
        holdings=holdings,
        z_cov=z,
        z_scale=z_scale,
        critical_root=critical_root_laplace(n, z_scale),
        omega=omega,
        method="analytic-laplace",
    )


def holding_gaussian(alpha: np.ndarray, v: SpdMatrix, risk: RiskConfig) -> np.ndarray:
    """Mean-variance solution V^{-1} alpha / lambda (the Normal-law optimum)."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (v.dimension,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({v.dimension},)")
    return solve_spd(v, alpha) / risk.lam


def holding_elliptical_numeric(
    alpha: np.ndarray,
    sigma: SpdMatrix,
    kappa: float,
    risk: RiskConfig,
    tol: float = 1e-10,
) -> AllocationReport:
    """General GED holding via the numeric root of x Psi_{n/2}(x) = Z'.

    Z' is the alpha Z-score under the scale matrix Sigma. Returns
    Sigma^{-1} alpha / (lambda Psi(x_hat)). The Normal case (kappa = 1/2,
    where Psi is identically 1 and Sigma = V) is dispatched exactly; all
    other kappa, including 1, run the numeric pipeline.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = sigma.dimension
    if alpha.shape != (n,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({n},)")
    factor = cov_scale_factor(kappa, n)
    z_scale = math.sqrt(mahalanobis_sq(alpha, sigma))
    z_cov = z_scale / math.sqrt(factor)
    if z_scale == 0.0:
        return AllocationReport(
            holdings=np.zeros(n),
            z_cov=0.0,
            z_scale=0.0,
            critical_root=0.0,
            omega=2.0,
            method="gaussian" if kappa == 0.5 else "numeric-ged",
        )
    if kappa == 0.5:
        return AllocationReport(
            holdings=solve_spd(sigma, alpha) / risk.lam,
            z_cov=z_cov,
            z_scale=z_scale,
            critical_root=z_scale,
            omega=2.0,
            method="gaussian",
        )
    root = critical_root_numeric(n, z_scale, kappa, tol)
    psi_hat = psi_numeric(PsiQuery(0.5 * n, root, kappa), max(1e-12, tol * 1e-2))
    holdings = solve_spd(sigma, alpha) / (risk.lam * psi_hat)
    return AllocationReport(
        holdings=holdings,
        z_cov=z_cov,
        z_scale=z_scale,
        critical_root=root,
        omega=2.0 * factor / psi_hat,
        method="numeric-ged",
    )


def holding_markowitz_constrained(alpha: np.ndarray, v: SpdMatrix) -> np.ndarray:
    """Fully-invested mean-variance portfolio V^{-1} alpha / (1^T V^{-1} alpha).

    The constraint eliminates the price of risk: the result is invariant to
    positive rescaling of alpha and of V, and its entries sum to exactly 1
    (the last entry absorbs the final rounding).
    """
    alpha = np.asarray(alpha, dtype=float)
    n = v.dimension
    if alpha.shape != (n,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({n},)")
    w = solve_spd(v, alpha)
    total = float(np.sum(w))
    floor = 1e-12 * max(float(np.abs(w).max()), 1e-300)
    if abs(total) <= floor:
        raise DegenerateConstraintError(
            "1^T V^{-1} alpha is numerically zero: the fully-invested portfolio is undefined"
        )
    h = w / total
    h[-1] = 1.0 - float(np.sum(h[:-1]))
    return h


def taylor_check_uv(alpha: float, sigma: float, risk: RiskConfig) -> float:
    """Residual of the quadratic-cubic expansion of the univariate holding.

    |h(alpha) - (alpha/(2 lambda s^2) - alpha^3/(8 lambda s^4))|, which
    decays like alpha^5 for small alpha.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    h = holding_uv_laplace(alpha, sigma, risk)
    s2 = sigma * sigma
    series = alpha / (2.0 * risk.lam * s2) - alpha**3 / (8.0 * risk.lam * s2 * s2)
    return abs(h - series)
