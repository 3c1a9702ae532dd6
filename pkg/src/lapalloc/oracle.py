"""Brute-force expected-utility evaluation that checks the analytic holdings.

The quantity minimized is E[e^(-lambda h.r)]. The univariate closed form is
minimized directly by golden-section search; multivariate Laplace holdings
are checked by Monte-Carlo scans along the ray through the analytic optimum,
with one shared sample set (common random numbers) so the scan is a smooth
curve in the ray scale and neighboring points can be compared through
paired differences rather than independent error bars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .allocation import RiskConfig, holding_mv_laplace
from .distributions import cov_from_scale, radial_direction_chunks
from .mathcore import SpdMatrix

__all__ = [
    "DivergenceError",
    "UtilityEstimate",
    "ScanPoint",
    "omega_objective_uv",
    "argmin_omega_uv",
    "expected_utility_mc",
    "verify_optimality_scan",
    "scan_optimum_ray",
    "MGF_MARGIN",
]

# Stay this far inside the sqrt(2) boundary where the moment integral blows
# up; estimates taken closer have effectively unbounded variance.
MGF_MARGIN = 0.05

_INV_PHI = 0.5 * (math.sqrt(5.0) - 1.0)


class DivergenceError(ValueError):
    """The expected-utility integral does not converge for this position."""


@dataclass(frozen=True)
class UtilityEstimate:
    """An expected-utility value with its numerical-error bound."""

    value: float
    std_error: float
    samples_or_evals: int

    def __post_init__(self) -> None:
        if not self.value > 0:
            raise ValueError("expected utility of a positive integrand must be positive")
        if not self.std_error >= 0:
            raise ValueError("std_error must be >= 0")


@dataclass(frozen=True)
class ScanPoint:
    """One point of a common-random-number ray scan.

    diff_vs_base and diff_std_error compare this point against the base
    scale of the scan using the same draws, which is the uncertainty that
    actually applies when ordering two points of the curve.
    """

    scale: float
    estimate: UtilityEstimate
    diff_vs_base: float
    diff_std_error: float


def omega_objective_uv(h: float, alpha: float, sigma: float, risk: RiskConfig) -> float:
    """Closed-form expected utility e^(-lambda h a) / (1 - lambda^2 h^2 s^2).

    Defined only where |lambda h sigma| < 1; outside, the position is so
    large that the Laplace tails make expected utility infinite.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    u = risk.lam * h * sigma
    if abs(u) >= 1.0:
        raise DivergenceError(
            f"|lambda h sigma| = {abs(u)} >= 1: expected utility diverges"
        )
    return math.exp(-risk.lam * h * alpha) / (1.0 - u * u)


def _golden_section_min(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> float:
    width = b - a
    c = b - _INV_PHI * width
    d = a + _INV_PHI * width
    fc, fd = f(c), f(d)
    while width > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            width = b - a
            c = b - _INV_PHI * width
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            width = b - a
            d = a + _INV_PHI * width
            fd = f(d)
    return 0.5 * (a + b)


def argmin_omega_uv(
    alpha: float, sigma: float, risk: RiskConfig, tol: float = 1e-10
) -> float:
    """Minimizer of the univariate objective over (-1/(lambda s), 1/(lambda s)).

    Golden-section search on the open interval (shrunk by 1e-9 at the
    endpoints, where the objective has poles), followed by two parabolic
    interpolation steps through function values. The polish recovers the
    sqrt(machine-eps) of locational precision that pure comparison search
    cannot resolve; the objective never enters through its derivative.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    bound = (1.0 - 1e-9) / (risk.lam * sigma)

    def f(h: float) -> float:
        return omega_objective_uv(h, alpha, sigma, risk)

    x = _golden_section_min(f, -bound, bound, max(tol, 1e-7 * bound))
    for step in (1e-4 * bound, 1e-6 * bound):
        d = min(step, 0.5 * (bound - x), 0.5 * (x + bound))
        if d <= 0.0:
            continue
        f_lo, f_mid, f_hi = f(x - d), f(x), f(x + d)
        curvature = f_lo - 2.0 * f_mid + f_hi
        if curvature <= 0.0:
            continue
        x = min(max(x + 0.5 * d * (f_lo - f_hi) / curvature, -bound), bound)
    return x


def _sigma_norm(h: np.ndarray, sigma: SpdMatrix) -> float:
    return float(np.linalg.norm(sigma.chol.T @ h))


def _check_mgf(h: np.ndarray, sigma: SpdMatrix, lam: float, margin: float) -> None:
    reach = lam * _sigma_norm(h, sigma)
    if reach >= math.sqrt(2.0) - margin:
        raise DivergenceError(
            f"lambda * ||h||_Sigma = {reach:.6g} is not below sqrt(2) - {margin}: "
            "the expected-utility integral (nearly) diverges"
        )


def _stream_scan(
    h: np.ndarray,
    scales: Sequence[float],
    alpha: np.ndarray,
    sigma: SpdMatrix,
    lam: float,
    count: int,
    seed: int,
    base_index: int | None,
) -> list[ScanPoint]:
    """Accumulate E[e^(-lambda s h.r)] for every scale over one shared draw stream."""
    n = sigma.dimension
    alpha = np.asarray(alpha, dtype=float)
    h = np.asarray(h, dtype=float)
    k = len(scales)
    sums = np.zeros(k)
    sq_sums = np.zeros(k)
    diff_sums = np.zeros(k)
    diff_sq_sums = np.zeros(k)
    lh = sigma.chol.T @ h
    drift = float(h @ alpha)
    for g, u in radial_direction_chunks(n, count, seed):
        # exponent of e^(-lambda s h.r) with r = alpha + g L u
        proj = drift + g * (u @ lh)
        base = np.exp(-lam * scales[base_index] * proj) if base_index is not None else None
        for j, s in enumerate(scales):
            y = np.exp(-lam * s * proj)
            sums[j] += y.sum()
            sq_sums[j] += (y * y).sum()
            if base is not None:
                d = y - base
                diff_sums[j] += d.sum()
                diff_sq_sums[j] += (d * d).sum()
    points = []
    for j, s in enumerate(scales):
        mean = sums[j] / count
        var = max(sq_sums[j] / count - mean * mean, 0.0) * count / (count - 1) if count > 1 else 0.0
        est = UtilityEstimate(mean, math.sqrt(var / count), count)
        if base_index is None:
            points.append(ScanPoint(s, est, math.nan, math.nan))
        else:
            d_mean = diff_sums[j] / count
            d_var = (
                max(diff_sq_sums[j] / count - d_mean * d_mean, 0.0) * count / (count - 1)
                if count > 1
                else 0.0
            )
            points.append(ScanPoint(s, est, d_mean, math.sqrt(d_var / count)))
    return points


def expected_utility_mc(
    h: np.ndarray,
    alpha: np.ndarray,
    sigma: SpdMatrix,
    risk: RiskConfig,
    count: int,
    seed: int,
    margin: float = MGF_MARGIN,
) -> UtilityEstimate:
    """Monte-Carlo estimate of E[e^(-lambda h.r)] under the Laplace law.

    sigma is the density scale matrix. Draws are streamed in fixed chunks
    with per-chunk seeds, so the estimate is deterministic for a given seed
    and identical to one computed over ``sample_mv_laplace`` draws.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (sigma.dimension,):
        raise ValueError(f"h has shape {h.shape}, expected ({sigma.dimension},)")
    _check_mgf(h, sigma, risk.lam, margin)
    (point,) = _stream_scan(h, [1.0], alpha, sigma, risk.lam, count, seed, None)
    return point.estimate


def scan_optimum_ray(
    alpha: np.ndarray,
    sigma: SpdMatrix,
    risk: RiskConfig,
    scales: Sequence[float],
    count: int,
    seed: int,
    margin: float = MGF_MARGIN,
) -> list[ScanPoint]:
    """Common-random-number scan of expected utility along s * h_hat.

    h_hat is the analytic Laplace optimum for (alpha, V) with V derived
    from the scale matrix. Paired differences are taken against the scale
    closest to 1.0. Raises DivergenceError if any scale breaches the
    moment-convergence margin.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = sigma.dimension
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("scales must be non-empty")
    v = cov_from_scale(sigma, 1.0, n)
    h_hat = holding_mv_laplace(alpha, v, risk).holdings
    for s in scales:
        _check_mgf(s * h_hat, sigma, risk.lam, margin)
    base_index = min(range(len(scales)), key=lambda j: abs(scales[j] - 1.0))
    return _stream_scan(h_hat, scales, alpha, sigma, risk.lam, count, seed, base_index)


def verify_optimality_scan(
    alpha: np.ndarray,
    sigma: SpdMatrix,
    risk: RiskConfig,
    scales: Sequence[float],
    count: int,
    seed: int,
) -> list[tuple[float, UtilityEstimate]]:
    """Expected utility along the ray through the analytic optimum, per scale."""
    points = scan_optimum_ray(alpha, sigma, risk, scales, count, seed)
    return [(p.scale, p.estimate) for p in points]
