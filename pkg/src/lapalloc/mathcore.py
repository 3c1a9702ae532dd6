"""Special functions, quadrature, and SPD linear algebra used by every other module.

All operations are pure functions of their inputs and safe to call from any
number of threads. ``SpdMatrix`` is immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.linalg import solve_triangular

__all__ = [
    "NotPositiveDefiniteError",
    "NonConvergenceError",
    "SpdMatrix",
    "QuadratureResult",
    "bessel_i",
    "bessel_i_scaled",
    "integrate_semi_infinite",
    "mahalanobis_sq",
    "solve_spd",
]


class NotPositiveDefiniteError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


class NonConvergenceError(RuntimeError):
    """A quadrature or root-finding routine exhausted its budget."""


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """A symmetric positive-definite matrix with its Cholesky factor.

    Positive-definiteness is established by the factorization itself: if
    Cholesky succeeds (all pivots > 0), the matrix is SPD. The lower factor
    is computed once on construction and reused by every solve.
    """

    entries: np.ndarray
    chol: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        scale = np.abs(a).max()
        if scale > 0 and np.abs(a - a.T).max() > 1e-12 * scale:
            raise ValueError("matrix is not symmetric to 1e-12 relative tolerance")
        a = 0.5 * (a + a.T)
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "Cholesky factorization failed: matrix is not positive definite"
            ) from exc
        recon = chol @ chol.T
        if np.abs(recon - a).max() > 1e-10 * max(scale, 1e-300):
            raise NotPositiveDefiniteError(
                "Cholesky factor does not reconstruct the matrix to 1e-10"
            )
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "chol", chol)
        a.setflags(write=False)
        chol.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def log_det(self) -> float:
        """log|M|, from the Cholesky diagonal."""
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def scaled(self, factor: float) -> "SpdMatrix":
        """The matrix multiplied by a positive scalar."""
        if not factor > 0:
            raise ValueError("scaling factor must be positive")
        return SpdMatrix(self.entries * factor)


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a definite integral with its error estimate and cost."""

    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self) -> None:
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be >= 0")
        if not self.evaluations > 0:
            raise ValueError("evaluations must be > 0")


def bessel_i(order: float, arg: float) -> float:
    """Modified Bessel function of the first kind, I_nu(x).

    Requires order >= 0 and arg >= 0, both finite. Arguments large enough
    that I_nu(x) overflows a double return inf; use :func:`bessel_i_scaled`
    in that regime.
    """
    _check_bessel_args(order, arg)
    return float(special.iv(order, arg))


def bessel_i_scaled(order: float, arg: float) -> float:
    """Exponentially scaled modified Bessel function, e^(-x) I_nu(x)."""
    _check_bessel_args(order, arg)
    return scaled_bessel_i(order, arg)


# past this point scipy's AMOS-backed ive starts returning nan
_IVE_LARGE_ARG = 1e5


def scaled_bessel_i(order: float, arg: float) -> float:
    """e^(-x) I_nu(x) for any order > -1, with a large-argument fallback.

    The library routine fails for arguments beyond ~1e6; there the standard
    large-argument series 1/sqrt(2 pi x) * (1 - (mu-1)/(8x) + ...) with
    mu = 4 nu^2 is accurate to machine precision whenever mu << x.
    """
    mu = 4.0 * order * order
    if arg > _IVE_LARGE_ARG and mu < arg:
        term = total = 1.0
        for k in range(1, 16):
            term *= -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * arg * k)
            total += term
            if abs(term) <= 1e-17 * abs(total):
                break
        return total / math.sqrt(2.0 * math.pi * arg)
    return float(special.ive(order, arg))


def _check_bessel_args(order: float, arg: float) -> None:
    if not (np.isfinite(order) and np.isfinite(arg)):
        raise ValueError("Bessel order and argument must be finite")
    if order < 0:
        raise ValueError(f"Bessel order must be >= 0, got {order}")
    if arg < 0:
        raise ValueError(f"Bessel argument must be >= 0, got {arg}")


def integrate_semi_infinite(
    integrand: Callable[[float], float],
    tol: float = 1e-10,
    *,
    rel_tol: float = 0.0,
) -> QuadratureResult:
    """Integrate ``integrand`` over (0, inf) with adaptive quadrature.

    The half-line is mapped onto a finite interval by QUADPACK's rational
    substitution and adaptively subdivided (scipy.integrate.quad). Success
    requires the error estimate to satisfy
    ``err <= max(tol, rel_tol * |value|)``; otherwise a
    :class:`NonConvergenceError` is raised, which is also how a divergent
    or near-divergent integrand surfaces.
    """
    if not (tol > 0 or rel_tol > 0):
        raise ValueError("tol (or rel_tol) must be positive")
    with np.errstate(all="ignore"):
        out = integrate.quad(
            integrand, 0.0, np.inf, epsabs=tol, epsrel=rel_tol, limit=200, full_output=1
        )
    value, abs_err = out[0], out[1]
    info = out[2] if len(out) > 2 and isinstance(out[2], dict) else {}
    evaluations = int(info.get("neval", 1)) or 1
    threshold = max(tol, rel_tol * abs(value))
    if len(out) > 3 or not np.isfinite(value) or abs_err > threshold:
        raise NonConvergenceError(
            f"semi-infinite quadrature did not converge: value={value!r}, "
            f"error estimate {abs_err!r} exceeds {threshold!r}"
        )
    return QuadratureResult(float(value), float(abs_err), evaluations)


def solve_spd(m: SpdMatrix, b: np.ndarray) -> np.ndarray:
    """Solve m x = b via the stored Cholesky factor (never an explicit inverse)."""
    b = np.asarray(b, dtype=float)
    if b.shape != (m.dimension,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m.dimension},)")
    y = solve_triangular(m.chol, b, lower=True)
    return solve_triangular(m.chol.T, y, lower=False)


def mahalanobis_sq(v: np.ndarray, m: SpdMatrix) -> float:
    """Squared Mahalanobis norm v^T m^{-1} v, via a triangular solve."""
    v = np.asarray(v, dtype=float)
    if v.shape != (m.dimension,):
        raise ValueError(f"vector has shape {v.shape}, expected ({m.dimension},)")
    y = solve_triangular(m.chol, v, lower=True)
    return float(y @ y)
