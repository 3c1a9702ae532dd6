"""Command-line front-end: allocation reports, curve tables, sampling, verification.

A problem is a single JSON file carrying alpha, the matrix, an explicit
matrix_kind ("covariance" or "scale" -- never inferred, since the
distinction between the two is exactly where allocation mistakes hide),
the kurtosis parameter kappa, and the price of risk lambda.

Exit codes: 0 success/PASS, 1 verification FAIL, 2 malformed input,
3 numerical failure (non-SPD matrix, divergence, non-convergence).
Tables are comma-separated with 17 significant digits; diagnostics go to
standard error. Reports and tables are data-only by default; --figure
additionally renders the curve commands to an image file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .allocation import (
    AllocationReport,
    DegenerateConstraintError,
    RiskConfig,
    holding_elliptical_numeric,
    holding_gaussian,
    holding_markowitz_constrained,
    holding_mv_laplace,
)
from .distributions import cov_from_scale, sample_mv_laplace, scale_from_cov
from .mathcore import NonConvergenceError, NotPositiveDefiniteError, SpdMatrix
from .oracle import DivergenceError, scan_optimum_ray
from .scaling import SQRT2, PsiQuery, psi_laplace, psi_numeric

__all__ = ["CurveSpec", "ProblemFile", "load_problem", "main"]

VERIFY_SCALES = (0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5)
METHODS = ("laplace", "ged", "normal", "markowitz-constrained")


def _fmt(value: float) -> str:
    return f"{value:.17g}"


@dataclass(frozen=True)
class CurveSpec:
    """Grid for the shrinkage-multiplier table: portfolio sizes and Z range."""

    n_values: tuple[int, ...]
    z_max: float
    steps: int

    def __post_init__(self) -> None:
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be integers >= 1")
        if not self.z_max > 0:
            raise ValueError(f"z_max must be positive, got {self.z_max}")
        if self.steps < 2:
            raise ValueError(f"steps must be at least 2, got {self.steps}")


@dataclass(frozen=True)
class ProblemFile:
    """One allocation problem: alpha, matrix (+ its kind), kappa, lambda."""

    alpha: np.ndarray
    matrix: np.ndarray
    matrix_kind: str
    kappa: float
    lam: float

    def __post_init__(self) -> None:
        if self.alpha.ndim != 1 or self.alpha.size < 1:
            raise ValueError("alpha must be a non-empty list of reals")
        n = self.alpha.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix must be {n}x{n} to match alpha, got {self.matrix.shape}")
        if self.matrix_kind not in ("covariance", "scale"):
            raise ValueError(f"matrix_kind must be 'covariance' or 'scale', got {self.matrix_kind!r}")
        if not (0.0 < self.kappa <= 1.0):
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def dimension(self) -> int:
        return self.alpha.size

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "matrix": self.matrix.tolist(),
            "matrix_kind": self.matrix_kind,
            "kappa": self.kappa,
            "lambda": self.lam,
        }


def load_problem(
    path: str, kappa_override: float | None = None, lam_override: float | None = None
) -> ProblemFile:
    """Parse a problem JSON file, applying any command-line overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("problem file must contain a JSON object")
    try:
        alpha = np.asarray(raw["alpha"], dtype=float)
        matrix = np.asarray(raw["matrix"], dtype=float)
        matrix_kind = raw["matrix_kind"]
    except KeyError as exc:
        raise ValueError(f"problem file is missing required key {exc}") from exc
    kappa = kappa_override if kappa_override is not None else float(raw.get("kappa", 1.0))
    lam = lam_override if lam_override is not None else raw.get("lambda")
    if lam is None:
        raise ValueError("lambda is required (in the file or via --lambda)")
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(matrix))):
        raise ValueError("alpha and matrix entries must be finite numbers")
    return ProblemFile(alpha, matrix, str(matrix_kind), kappa, float(lam))


def _as_covariance(problem: ProblemFile, kappa: float) -> SpdMatrix:
    m = SpdMatrix(problem.matrix)
    if problem.matrix_kind == "covariance":
        return m
    return cov_from_scale(m, kappa, problem.dimension)


def _as_scale(problem: ProblemFile, kappa: float) -> SpdMatrix:
    m = SpdMatrix(problem.matrix)
    if problem.matrix_kind == "scale":
        return m
    return scale_from_cov(m, kappa, problem.dimension)


def _report_to_dict(report: AllocationReport, problem: ProblemFile) -> dict:
    return {
        "method": report.method,
        "holdings": report.holdings.tolist(),
        "z_cov": report.z_cov,
        "z_scale": report.z_scale,
        "critical_root": report.critical_root,
        "omega": report.omega,
        "input": problem.to_dict(),
    }


def cmd_allocate(args: argparse.Namespace) -> int:
    problem = load_problem(args.input, args.kappa, args.lam)
    risk = RiskConfig(problem.lam)
    if args.method == "laplace":
        report = holding_mv_laplace(problem.alpha, _as_covariance(problem, 1.0), risk)
    elif args.method == "ged":
        report = holding_elliptical_numeric(
            problem.alpha, _as_scale(problem, problem.kappa), problem.kappa, risk, args.tol
        )
    elif args.method == "normal":
        v = _as_covariance(problem, 0.5)
        holdings = holding_gaussian(problem.alpha, v, risk)
        z = math.sqrt(max(float(problem.alpha @ (holdings * risk.lam)), 0.0))
        report = AllocationReport(holdings, z, z, z, 2.0, "gaussian")
    else:  # markowitz-constrained
        kappa = problem.kappa
        if kappa == 1.0:
            base = holding_mv_laplace(problem.alpha, _as_covariance(problem, 1.0), risk)
        else:
            base = holding_elliptical_numeric(
                problem.alpha, _as_scale(problem, kappa), kappa, risk, args.tol
            )
        holdings = holding_markowitz_constrained(
            problem.alpha, _as_covariance(problem, kappa)
        )
        report = AllocationReport(
            holdings, base.z_cov, base.z_scale, base.critical_root, base.omega,
            "markowitz-constrained",
        )
    json.dump(_report_to_dict(report, problem), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"--n-list must be comma-separated integers, got {text!r}") from exc
    if not values or any(n < 1 for n in values):
        raise ValueError("--n-list entries must be integers >= 1")
    return values


def cmd_omega_curve(args: argparse.Namespace) -> int:
    spec = CurveSpec(tuple(_parse_n_list(args.n_list)), args.z_max, args.steps)
    from .scaling import omega_laplace

    grid = np.linspace(0.0, spec.z_max, spec.steps)
    columns = [[omega_laplace(n, z) for z in grid] for n in spec.n_values]
    print("z," + ",".join(f"omega_n{n}" for n in spec.n_values))
    for i, z in enumerate(grid):
        print(_fmt(z) + "," + ",".join(_fmt(col[i]) for col in columns))
    if args.figure:
        _save_line_figure(
            args.figure,
            grid,
            [(f"n = {n}", col) for n, col in zip(spec.n_values, columns)],
            xlabel="Z",
            ylabel="Omega_n(Z)",
            title="Shrinkage multiplier vs alpha Z-score",
        )
    return 0


def cmd_psi_table(args: argparse.Namespace) -> int:
    if not args.nu > 0:
        raise ValueError("--nu must be positive")
    if not (0.0 < args.kappa <= 1.0):
        raise ValueError("--kappa must lie in (0, 1]")
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    x_max = args.x_max
    if not x_max > 0:
        raise ValueError("--x-max must be positive")
    if args.kappa == 1.0:
        x_max = min(x_max, SQRT2 - 1e-3)
    grid = np.linspace(0.0, x_max, args.steps)
    print("x,psi_numeric,psi_analytic,abs_diff")
    numeric_column = []
    for x in grid:
        numeric = psi_numeric(PsiQuery(args.nu, float(x), args.kappa), args.tol)
        numeric_column.append(numeric)
        if args.kappa == 1.0:
            analytic = psi_laplace(args.nu, float(x))
            print(f"{_fmt(x)},{_fmt(numeric)},{_fmt(analytic)},{_fmt(abs(numeric - analytic))}")
        else:
            print(f"{_fmt(x)},{_fmt(numeric)},,")
    if args.figure:
        series = [("numeric", numeric_column)]
        if args.kappa == 1.0:
            series.append(("analytic", [psi_laplace(args.nu, float(x)) for x in grid]))
        _save_line_figure(
            args.figure,
            grid,
            series,
            xlabel="x",
            ylabel=f"Psi_{args.nu:g}(x)",
            title=f"Scaling function, kappa = {args.kappa:g}",
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    problem = load_problem(args.input, args.kappa, args.lam)
    if problem.kappa != 1.0:
        raise ValueError("verify supports only the Laplace case (kappa = 1)")
    risk = RiskConfig(problem.lam)
    if not np.any(problem.alpha):
        print("scale,estimate,std_error,diff_vs_unit,diff_std_error")
        print("verdict: PASS (alpha is zero; every scale of the zero holding is identical)")
        return 0
    sigma = _as_scale(problem, 1.0)
    points = scan_optimum_ray(
        problem.alpha, sigma, risk, VERIFY_SCALES, args.draws, args.seed
    )
    print("scale,estimate,std_error,diff_vs_unit,diff_std_error")
    for p in points:
        print(
            f"{_fmt(p.scale)},{_fmt(p.estimate.value)},{_fmt(p.estimate.std_error)},"
            f"{_fmt(p.diff_vs_base)},{_fmt(p.diff_std_error)}"
        )
    by_scale = {p.scale: p for p in points}
    min_point = min(points, key=lambda p: p.estimate.value)
    separated = all(
        by_scale[s].diff_vs_base > 3.0 * by_scale[s].diff_std_error for s in (0.9, 1.1)
    )
    if min_point.scale == 1.0 and separated:
        print("verdict: PASS (minimum at scale 1.0; neighbors higher by > 3 paired standard errors)")
        return 0
    print(
        "verdict: FAIL "
        f"(minimum at scale {min_point.scale:g}; neighbor separation "
        f"{'met' if separated else 'not met'})"
    )
    return 1


def cmd_sample(args: argparse.Namespace) -> int:
    problem = load_problem(args.input, args.kappa, args.lam)
    if problem.kappa != 1.0:
        raise ValueError("sample supports only the Laplace case (kappa = 1)")
    if args.count < 1:
        raise ValueError("--count must be positive")
    sigma = _as_scale(problem, 1.0)
    sample = sample_mv_laplace(problem.alpha, sigma, args.count, args.seed)
    out = sys.stdout
    for row in sample.draws:
        out.write(",".join(_fmt(x) for x in row) + "\n")
    if args.summary:
        mean = sample.draws.mean(axis=0)
        cov = np.cov(sample.draws, rowvar=False).reshape(sigma.dimension, sigma.dimension)
        out.write("# mean," + ",".join(_fmt(x) for x in mean) + "\n")
        for row in cov:
            out.write("# cov," + ",".join(_fmt(x) for x in row) + "\n")
    return 0


def _save_line_figure(path, x, series, xlabel: str, ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, ys in series:
        ax.plot(x, ys, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lapalloc",
        description="Optimal holdings under fat-tailed return distributions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, needs_input: bool) -> None:
        if needs_input:
            p.add_argument("--input", required=True, help="problem JSON file")
            p.add_argument("--kappa", type=float, default=None, help="override the file's kappa")
            p.add_argument(
                "--lambda", dest="lam", type=float, default=None, help="override the file's lambda"
            )
        p.add_argument(
            "--tol", type=float, default=1e-10, help="quadrature/root tolerance (default 1e-10)"
        )

    p = sub.add_parser("allocate", help="compute optimal holdings for a problem file")
    add_common(p, needs_input=True)
    p.add_argument("--method", choices=METHODS, default="laplace")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("omega-curve", help="tabulate the shrinkage multiplier on a Z grid")
    add_common(p, needs_input=False)
    p.add_argument("--n-list", default="1,2,10,100", help="comma-separated portfolio sizes")
    p.add_argument("--z-max", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--figure", default=None, help="also render the curves to this image file")
    p.set_defaults(func=cmd_omega_curve)

    p = sub.add_parser("psi-table", help="tabulate the scaling function on an x grid")
    add_common(p, needs_input=False)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=SQRT2 - 1e-3)
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--figure", default=None, help="also render the table to this image file")
    p.set_defaults(func=cmd_psi_table)

    p = sub.add_parser("verify", help="Monte-Carlo check that the analytic holding is optimal")
    add_common(p, needs_input=True)
    p.add_argument("--draws", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="draw simulated returns for a problem file")
    add_common(p, needs_input=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--summary", action="store_true", help="append sample mean and covariance")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        NotPositiveDefiniteError,
        NonConvergenceError,
        DivergenceError,
        DegenerateConstraintError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
