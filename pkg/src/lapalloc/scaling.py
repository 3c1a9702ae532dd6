"""The position scaling function Psi and the shrinkage multiplier Omega.

Psi_nu(x) is the ratio of two Bessel-weighted radial integrals; it deflates
positions when returns have fat tails and is identically 1 for the Normal
law. For the Laplace law it collapses to the closed form (1+2nu)/(2-x^2),
valid for x < sqrt(2). Omega_n is the equivalent shrinkage factor applied
to the mean-variance solution, normalized so that Omega = 2 reproduces it.

Every Omega/root expression is evaluated in a cancellation-free form
(4/(sqrt(1+a)+1) style); the naive sqrt(1+a)-1 numerators lose all
precision as the argument approaches zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import eta
from .mathcore import (
    NonConvergenceError,
    QuadratureResult,
    integrate_semi_infinite,
    scaled_bessel_i,
)

__all__ = [
    "PsiQuery",
    "SQRT2_GUARD_BAND",
    "psi_numeric",
    "psi_laplace",
    "laplace_integral_numerator",
    "laplace_integral_denominator",
    "omega_laplace",
    "omega_conjectured",
    "omega_large_n_limit",
    "omega_asymptote",
]

SQRT2 = math.sqrt(2.0)
# Numeric integration at kappa=1 stops this far short of the x=sqrt(2) pole,
# where the integrand's decay rate vanishes; the analytic path covers the rest.
SQRT2_GUARD_BAND = 1e-6


@dataclass(frozen=True)
class PsiQuery:
    """Arguments of the scaling function: order nu = n/2, abscissa x, kurtosis kappa."""

    nu: float
    x: float
    kappa: float

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.x >= 0:
            raise ValueError(f"x must be non-negative, got {self.x}")
        if not (0.0 < self.kappa <= 1.0):
            # for kappa > 1 the defining integrals diverge for any x > 0
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")
        if self.kappa == 1.0 and not self.x < SQRT2:
            raise ValueError(f"x must be below sqrt(2) when kappa=1, got {self.x}")


def _radial_log_integrand(power, x, kappa, eta_k, order):
    """Log of e^(-eta g^(1/kappa)) I_order(g x) g^power, assembled stably.

    The Bessel factor enters in scaled form (e^(-gx) I_order(gx)) with the
    e^(gx) growth folded back into the exponential kernel, so the effective
    kernel decays like e^(-(eta g^(1/kappa) - g x)), and everything stays in
    log space until a caller exponentiates a shifted value.
    """
    inv_kappa = 1.0 / kappa

    def log_f(g: float) -> float:
        if g <= 0.0 or g > 1e250:
            return -math.inf
        bessel = scaled_bessel_i(order, x * g)
        if not (bessel > 0.0 and math.isfinite(bessel)):
            return -math.inf
        return x * g - eta_k * g**inv_kappa + power * math.log(g) + math.log(bessel)

    return log_f


def _locate_peak(log_f, g_ref: float) -> float:
    """Argmax of the log-integrand, by log-grid scan plus golden refinement."""
    span = 20.0
    for _ in range(4):
        grid = np.exp(np.linspace(math.log(g_ref) - span, math.log(g_ref) + span, 121))
        values = [log_f(float(g)) for g in grid]
        best = int(np.argmax(values))
        if values[best] == -math.inf:
            raise NonConvergenceError("radial integrand vanished on the search grid")
        if 0 < best < len(grid) - 1:
            break
        span *= 4.0  # peak fell on an edge; widen the search
    lo = math.log(grid[max(best - 1, 0)])
    hi = math.log(grid[min(best + 1, len(grid) - 1)])
    inv_phi = 0.5 * (math.sqrt(5.0) - 1.0)
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = log_f(math.exp(c)), log_f(math.exp(d))
    for _ in range(60):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = log_f(math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = log_f(math.exp(d))
    return math.exp(0.5 * (lo + hi))


def _decay_scale(log_f, g_peak: float, m: float, direction: float) -> float:
    """Distance from the peak over which the log-integrand falls by ~2."""
    step = 1e-3 * g_peak
    for _ in range(150):
        g = g_peak + direction * step
        if g <= 0.0:
            return g_peak  # the entire left flank fits inside one peak width
        if log_f(g) < m - 2.0:
            return step
        step *= 2.0
    raise NonConvergenceError("radial integrand does not decay away from its peak")


def _radial_integral(
    power: float, x: float, kappa: float, eta_k: float, order: float, rel_tol: float
) -> tuple[QuadratureResult, float]:
    """Peak-normalized radial integral; true value = result.value * e^(log_scale).

    The integrand can be a needle: as kappa -> 1 with large x its width
    shrinks like 1/sqrt(x g (1-kappa)) of its location, far below what an
    adaptive rule finds from cold. Integration is therefore split at the
    numerically located peak into two half-line pieces, each rescaled by
    its own measured decay width so the mass sits at order-one abscissas.

    Accuracy is floored by the rounding noise of the log integrand, about
    eps times the magnitude of its largest term; requests below the floor
    are delivered at the floor, and the whole evaluation is refused when
    the floor itself cannot support ~1e-7 relative accuracy.
    """
    log_f = _radial_log_integrand(power, x, kappa, eta_k, order)
    if kappa == 1.0:
        g_ref = max(1.0, (power + 2.0) / (eta_k - x))
    else:
        g_exp = (kappa * x / eta_k) ** (kappa / (1.0 - kappa)) if x > 0 else 0.0
        g_pow = ((power + 1.0) * kappa / eta_k) ** kappa
        g_ref = max(g_exp, g_pow, 1e-6)
    g_peak = _locate_peak(log_f, g_ref)
    m = log_f(g_peak)

    exponent_size = (
        x * g_peak
        + eta_k * g_peak ** (1.0 / kappa)
        + abs(power * math.log(g_peak))
        + 1.0
    )
    noise_floor = 64.0 * np.finfo(float).eps * exponent_size
    if noise_floor > 1e-7:
        raise NonConvergenceError(
            f"log-integrand rounding floor {noise_floor:.2e} cannot support the "
            "requested accuracy (exponent terms too large for double precision)"
        )
    effective_rel = max(rel_tol, noise_floor)

    def piece(direction: float) -> QuadratureResult:
        width = _decay_scale(log_f, g_peak, m, direction)

        def f(t: float) -> float:
            shifted = log_f(g_peak + direction * width * t) - m
            return width * math.exp(shifted) if shifted > -745.0 else 0.0

        return integrate_semi_infinite(f, tol=0.0, rel_tol=effective_rel)

    right = piece(1.0)
    left = piece(-1.0)
    total = QuadratureResult(
        right.value + left.value,
        right.abs_error_estimate + left.abs_error_estimate,
        right.evaluations + left.evaluations,
    )
    if total.value <= 0.0:
        raise NonConvergenceError("radial integral evaluated to a non-positive value")
    return total, m


def psi_numeric(q: PsiQuery, tol: float = 1e-10) -> float:
    """Scaling function by direct quadrature of its defining integral ratio.

    Relative accuracy ``tol``. For kappa = 1 the abscissa must stay below
    sqrt(2) by at least the guard band, else a ``NonConvergenceError`` is
    raised. At x = 0 the 0/0 ratio is replaced by its limit, obtained by
    quadrature of the limiting integrands (small-argument Bessel series:
    I_nu(y) ~ (y/2)^nu / Gamma(nu+1)).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    eta_k = eta(q.kappa)
    if q.kappa == 1.0 and q.x > SQRT2 - SQRT2_GUARD_BAND:
        raise NonConvergenceError(
            f"x={q.x} is inside the guard band of the sqrt(2) convergence boundary"
        )
    rel = min(tol, 1e-8)
    if q.x == 0.0:
        num = _moment_integral(2.0 * q.nu + 1.0, q.kappa, eta_k, rel)
        den = _moment_integral(2.0 * q.nu - 1.0, q.kappa, eta_k, rel)
        return num.value / (2.0 * q.nu * den.value)
    num, m_num = _radial_integral(q.nu + 1.0, q.x, q.kappa, eta_k, q.nu, rel)
    den, m_den = _radial_integral(q.nu, q.x, q.kappa, eta_k, q.nu - 1.0, rel)
    return math.exp(m_num - m_den) * num.value / (q.x * den.value)


def _moment_integral(power: float, kappa: float, eta_k: float, rel_tol: float) -> QuadratureResult:
    """Integral of e^(-eta g^(1/kappa)) g^power over (0, inf)."""
    scale = max(1.0, ((power + 1.0) * kappa / eta_k) ** kappa)

    def f(u: float) -> float:
        g = scale * u
        if g <= 0.0 or g > 1e250:
            return 0.0
        log_kernel = -eta_k * g ** (1.0 / kappa) + power * math.log(g)
        if log_kernel < -745.0:
            return 0.0
        return scale * math.exp(log_kernel)

    return integrate_semi_infinite(f, tol=0.0, rel_tol=rel_tol)


def _check_laplace_x(x: float) -> None:
    if not 0.0 <= x < SQRT2:
        raise ValueError(f"x must lie in [0, sqrt(2)), got {x}")


def psi_laplace(nu: float, x: float) -> float:
    """Closed-form scaling function (1+2nu)/(2-x^2) for the Laplace law."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    _check_laplace_x(x)
    return (1.0 + 2.0 * nu) / (2.0 - x * x)


def laplace_integral_numerator(nu: float, x: float) -> float:
    """Closed form of the Laplace numerator integral.

    2^(nu+3/2) Gamma(nu+3/2) x^nu (2-x^2)^(-nu-3/2) / sqrt(pi). At x = 0 the
    x^nu factor makes this 0 for nu > 0.
    """
    _check_laplace_x(x)
    if x == 0.0:
        return 0.0
    log_val = (
        (nu + 1.5) * math.log(2.0)
        + math.lgamma(nu + 1.5)
        + nu * math.log(x)
        - (nu + 1.5) * math.log(2.0 - x * x)
        - 0.5 * math.log(math.pi)
    )
    return math.exp(log_val)


def laplace_integral_denominator(nu: float, x: float) -> float:
    """Closed form of the Laplace denominator integral.

    2^(nu+1/2) Gamma(nu+1/2) x^(nu-1) (2-x^2)^(-nu-1/2) / sqrt(pi). The
    x^(nu-1) factor diverges as x -> 0 for nu < 1 (the underlying integrand
    does too); the coefficient of that x^(nu-1) growth at nu = 1/2 is
    1/sqrt(pi).
    """
    _check_laplace_x(x)
    if x == 0.0:
        if nu > 1.0:
            return 0.0
        if nu == 1.0:
            return math.exp(
                1.5 * math.log(2.0) + math.lgamma(1.5) - 1.5 * math.log(2.0) - 0.5 * math.log(math.pi)
            )
        return math.inf
    log_val = (
        (nu + 0.5) * math.log(2.0)
        + math.lgamma(nu + 0.5)
        + (nu - 1.0) * math.log(x)
        - (nu + 0.5) * math.log(2.0 - x * x)
        - 0.5 * math.log(math.pi)
    )
    return math.exp(log_val)


def omega_laplace(n: int, z: float) -> float:
    """Shrinkage multiplier for an n-asset Laplace allocation at alpha Z-score z.

    Equals 4/(sqrt(1 + 4 z^2/(n+1)) + 1): the value is 2 at z = 0 (the
    mean-variance baseline) and decays toward 0 as z grows.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not z >= 0:
        raise ValueError(f"z must be non-negative, got {z}")
    return 4.0 / (math.sqrt(1.0 + 4.0 * z * z / (n + 1.0)) + 1.0)


def omega_conjectured(z: float) -> float:
    """Dimension-free conjectured shrinkage 2(sqrt(1+z^2)-1)/z^2.

    Evaluated as 2/(sqrt(1+z^2)+1); takes the value 1 at the origin. Note
    the scale: its maximum is 1, half of omega_laplace's, a discrepancy
    that traces to the variance convention of the univariate law.
    """
    if not z >= 0:
        raise ValueError(f"z must be non-negative, got {z}")
    return 2.0 / (math.sqrt(1.0 + z * z) + 1.0)


def omega_large_n_limit(zeta: float) -> float:
    """Limit of omega_laplace(n, zeta sqrt(n)) as n grows: (sqrt(1+4 zeta^2)-1)/zeta^2."""
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    return 4.0 / (math.sqrt(1.0 + 4.0 * zeta * zeta) + 1.0)


def omega_asymptote(n: int, z: float) -> float:
    """Large-z asymptote of the shrinkage multiplier, 2 sqrt(n+1)/|z|."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not z > 0:
        raise ValueError(f"z must be positive, got {z}")
    return 2.0 * math.sqrt(n + 1.0) / abs(z)
