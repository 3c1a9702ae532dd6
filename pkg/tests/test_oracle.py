import math

import numpy as np
import pytest
from scipy import integrate

from lapalloc import (
    DivergenceError,
    RiskConfig,
    SpdMatrix,
    argmin_omega_uv,
    cov_from_scale,
    expected_utility_mc,
    holding_mv_laplace,
    holding_uv_laplace,
    omega_objective_uv,
    sample_mv_laplace,
    scan_optimum_ray,
    uv_laplace_pdf,
    verify_optimality_scan,
)

SQRT2 = math.sqrt(2.0)


class TestObjectiveClosedForm:
    def test_zero_position(self):
        assert omega_objective_uv(0.0, 0.5, 0.3, RiskConfig(2.0)) == 1.0

    def test_pole_rejected(self):
        with pytest.raises(DivergenceError):
            omega_objective_uv(1.0, 0.1, 1.0, RiskConfig(1.0))
        with pytest.raises(DivergenceError):
            omega_objective_uv(-2.0, 0.1, 0.6, RiskConfig(1.0))

    @staticmethod
    def _quadrature_value(h, alpha, sigma, lam):
        # expectation of e^(-lambda h r) under the Laplace density; the two
        # exponentials are combined before exponentiating so the integrand
        # stays representable where the product is tiny
        def integrand(r):
            return math.exp(-lam * h * r - abs(r - alpha) / sigma) / (2.0 * sigma)

        left, _ = integrate.quad(integrand, -np.inf, alpha)
        right, _ = integrate.quad(integrand, alpha, np.inf)
        return left + right

    def test_quadrature_agreement_point(self):
        h, alpha, sigma, lam = 1.0, 0.05, 0.3, 1.0
        closed = omega_objective_uv(h, alpha, sigma, RiskConfig(lam))
        assert abs(closed - self._quadrature_value(h, alpha, sigma, lam)) / closed < 1e-8

    @pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("u", [0.0, 0.3, 0.5, 0.7, 0.9])
    def test_quadrature_agreement_grid(self, t, u):
        # t = alpha/sigma, u = lambda h sigma
        sigma, lam = 0.4, 1.25
        alpha = t * sigma
        h = u / (lam * sigma)
        closed = omega_objective_uv(h, alpha, sigma, RiskConfig(lam))
        assert abs(closed - self._quadrature_value(h, alpha, sigma, lam)) / closed < 1e-8

    def test_analytic_holding_is_a_local_minimum(self):
        alpha, sigma, lam = 0.1, 0.2, 1.0
        risk = RiskConfig(lam)
        h_hat = holding_uv_laplace(alpha, sigma, risk)
        at_opt = omega_objective_uv(h_hat, alpha, sigma, risk)
        assert omega_objective_uv(0.99 * h_hat, alpha, sigma, risk) > at_opt
        assert omega_objective_uv(1.01 * h_hat, alpha, sigma, risk) > at_opt

    def test_derivative_vanishes_at_analytic_holding(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            sigma = float(rng.uniform(0.2, 1.0))
            lam = float(rng.uniform(0.5, 2.0))
            alpha = float(rng.uniform(-3.0, 3.0)) * sigma
            risk = RiskConfig(lam)
            h_hat = holding_uv_laplace(alpha, sigma, risk)
            step = 1e-5 / (lam * sigma)
            deriv = (
                omega_objective_uv(h_hat + step, alpha, sigma, risk)
                - omega_objective_uv(h_hat - step, alpha, sigma, risk)
            ) / (2.0 * step)
            assert abs(deriv) < 1e-8 * max(1.0, lam * sigma)


class TestArgminOracle:
    def test_zero_alpha(self):
        h = argmin_omega_uv(0.0, 0.5, RiskConfig(1.0), tol=1e-9)
        assert abs(h) < 1e-9

    def test_matches_closed_form(self):
        h = argmin_omega_uv(0.1, 0.2, RiskConfig(1.0), tol=1e-10)
        assert abs(h - 1.1803398874989485) < 1e-7

    def test_antisymmetry(self):
        tol = 1e-9
        pos = argmin_omega_uv(0.3, 0.5, RiskConfig(2.0), tol=tol)
        neg = argmin_omega_uv(-0.3, 0.5, RiskConfig(2.0), tol=tol)
        assert abs(pos + neg) < 2.0 * tol
        assert pos > 0.0 > neg

    def test_sign_matches_alpha(self):
        assert argmin_omega_uv(0.05, 0.4, RiskConfig(1.0)) > 0.0
        assert argmin_omega_uv(-0.05, 0.4, RiskConfig(1.0)) < 0.0


class TestExpectedUtilityMc:
    def test_zero_position_is_exact(self):
        est = expected_utility_mc(
            np.zeros(2), np.array([0.1, 0.2]), SpdMatrix(np.eye(2)), RiskConfig(1.0), 1000, seed=5
        )
        assert est.value == 1.0
        assert est.std_error == 0.0
        assert est.samples_or_evals == 1000

    def test_univariate_quadrature_agreement(self):
        # n=1 member of the multivariate family: density e^(-sqrt2|r-a|)/sqrt2
        alpha, lam, h = 0.08, 1.0, 0.5
        est = expected_utility_mc(
            np.array([h]), np.array([alpha]), SpdMatrix(np.array([[1.0]])),
            RiskConfig(lam), 10**6, seed=7,
        )

        def integrand(r):
            return math.exp(-lam * h * r - SQRT2 * abs(r - alpha)) / SQRT2

        left, _ = integrate.quad(integrand, -np.inf, alpha)
        right, _ = integrate.quad(integrand, alpha, np.inf)
        assert abs(est.value - (left + right)) < 3.0 * est.std_error

    def test_matches_sample_mv_laplace_draws(self):
        # the estimate is exactly the mean over the public sampler's draws
        alpha = np.array([0.1, -0.05])
        sigma = SpdMatrix(np.array([[0.5, 0.1], [0.1, 0.4]]))
        h = np.array([0.2, 0.1])
        lam, count, seed = 0.8, 50_000, 13
        est = expected_utility_mc(h, alpha, sigma, RiskConfig(lam), count, seed)
        draws = sample_mv_laplace(alpha, sigma, count, seed).draws
        direct = float(np.mean(np.exp(-lam * draws @ h)))
        assert est.value == pytest.approx(direct, rel=1e-12)

    def test_divergence_precondition(self):
        sigma = SpdMatrix(np.eye(1))
        with pytest.raises(DivergenceError):
            expected_utility_mc(
                np.array([SQRT2]), np.array([0.0]), sigma, RiskConfig(1.0), 100, seed=1
            )

    def test_determinism(self):
        args = (np.array([0.1] * 2), np.array([0.05, 0.0]), SpdMatrix(np.eye(2)), RiskConfig(1.0))
        a = expected_utility_mc(*args, 10000, seed=3)
        b = expected_utility_mc(*args, 10000, seed=3)
        assert a.value == b.value and a.std_error == b.std_error


class TestOptimalityScan:
    def setup_method(self):
        self.alpha = np.array([0.1, 0.1])
        self.sigma = SpdMatrix(np.eye(2) * 2.0 / 3.0)  # V = I
        self.risk = RiskConfig(1.0)

    def test_single_scale_equals_point_estimate(self):
        v = cov_from_scale(self.sigma, 1.0, 2)
        h_hat = holding_mv_laplace(self.alpha, v, self.risk).holdings
        scan = verify_optimality_scan(
            self.alpha, self.sigma, self.risk, [1.0], 20_000, seed=2
        )
        point = expected_utility_mc(h_hat, self.alpha, self.sigma, self.risk, 20_000, seed=2)
        assert scan[0][0] == 1.0
        assert scan[0][1].value == point.value

    def test_v_shape_and_minimum_location(self):
        scales = [0.5, 0.75, 1.0, 1.25, 1.5]
        points = scan_optimum_ray(
            self.alpha, self.sigma, self.risk, scales, 10**6, seed=3
        )
        values = [p.estimate.value for p in points]
        assert values.index(min(values)) == 2
        assert values[0] > values[1] > values[2] < values[3] < values[4]

    def test_scan_is_deterministic(self):
        scales = [0.8, 1.0, 1.2]
        a = scan_optimum_ray(self.alpha, self.sigma, self.risk, scales, 50_000, seed=11)
        b = scan_optimum_ray(self.alpha, self.sigma, self.risk, scales, 50_000, seed=11)
        assert all(
            x.estimate.value == y.estimate.value and x.diff_vs_base == y.diff_vs_base
            for x, y in zip(a, b)
        )

    def test_paired_differences_reference_unit_scale(self):
        points = scan_optimum_ray(
            self.alpha, self.sigma, self.risk, [0.9, 1.0, 1.1], 50_000, seed=19
        )
        base = [p for p in points if p.scale == 1.0][0]
        assert base.diff_vs_base == 0.0
        assert base.diff_std_error == 0.0
        for p in points:
            if p.scale != 1.0:
                assert p.diff_vs_base == pytest.approx(
                    p.estimate.value - base.estimate.value, rel=1e-9
                )
                assert p.diff_std_error > 0.0

    def test_divergent_scale_propagates(self):
        # push the outermost scale across the moment boundary
        with pytest.raises(DivergenceError):
            scan_optimum_ray(
                np.array([50.0, 50.0]), self.sigma, self.risk, [0.5, 1.0, 40.0], 1000, seed=1
            )

    def test_empty_scales_rejected(self):
        with pytest.raises(ValueError):
            scan_optimum_ray(self.alpha, self.sigma, self.risk, [], 1000, seed=1)
