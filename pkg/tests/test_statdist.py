import math

import numpy as np
import pytest

from pdcalib.statdist import (BetaParams, BracketError, RngStream, beta_cdf, beta_mean_var,
                              binomial_tail_le, log_gamma, sample_beta, solve_monotone)


class TestBetaParams:
    def test_valid(self):
        p = BetaParams(1.0, 2700.0)
        assert 0.0 < p.alpha / (p.alpha + p.beta) < 1.0

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0),
                                            (float("nan"), 1.0), (1.0, float("inf"))])
    def test_rejects_bad_shapes(self, alpha, beta):
        with pytest.raises(ValueError):
            BetaParams(alpha, beta)


class TestLogGamma:
    @pytest.mark.parametrize("x,expected", [
        (1.0, 0.0),                 # 0! = 1
        (2.0, 0.0),                 # 1! = 1
        (5.0, math.log(24.0)),      # 4! = 24
        (11.0, math.log(3628800.0)),
    ])
    def test_known_values(self, x, expected):
        assert log_gamma(x) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_domain_error(self, x):
        with pytest.raises(ValueError):
            log_gamma(x)

    def test_recurrence(self):
        # ln G(x+1) = ln G(x) + ln x over [0.5, 100]
        x = np.linspace(0.5, 100.0, 4000)
        lhs = log_gamma(x + 1.0)
        rhs = log_gamma(x) + np.log(x)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_accuracy_against_reference(self):
        # 1e-12 absolute where representable; a few ulp relative where
        # |ln G| itself is too large for 1e-12 absolute in binary64.
        from scipy.special import gammaln
        x = np.concatenate([np.geomspace(1e-3, 1e6, 500), np.linspace(0.5, 50.0, 500)])
        err = np.abs(log_gamma(x) - gammaln(x))
        tol = np.maximum(1e-12, 8.0 * np.finfo(float).eps * np.abs(gammaln(x)))
        assert np.all(err <= tol)

    def test_array_and_scalar_agree(self):
        xs = np.array([0.25, 1.0, 3.7, 88.0])
        vec = log_gamma(xs)
        for x, v in zip(xs, vec):
            assert log_gamma(float(x)) == v


class TestBetaMeanVar:
    def test_uniform(self):
        assert beta_mean_var(BetaParams(1, 1)) == pytest.approx((0.5, 1.0 / 12.0), rel=1e-14)

    def test_simple_arithmetic(self):
        mean, var = beta_mean_var(BetaParams(3, 12))
        assert mean == pytest.approx(0.2, rel=1e-14)
        assert var == pytest.approx(0.01, rel=1e-14)

    def test_heavy_cohort(self):
        mean, var = beta_mean_var(BetaParams(61, 1411))
        assert mean == pytest.approx(0.041440, abs=1e-6)
        assert var == pytest.approx(2.6968e-5, rel=1e-4)


class TestRngStream:
    def test_same_key_is_bit_identical(self):
        a = RngStream(123, 7).uniforms(10_000)
        b = RngStream(123, 7).uniforms(10_000)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 0).uniforms(1000)
        b = RngStream(123, 1).uniforms(1000)
        assert not np.array_equal(a, b)

    def test_distinct_seeds_differ(self):
        a = RngStream(1, 0).uniforms(1000)
        b = RngStream(2, 0).uniforms(1000)
        assert not np.array_equal(a, b)

    def test_uniforms_open_interval(self):
        u = RngStream(5, 5).uniforms(100_000)
        assert u.min() > 0.0 and u.max() < 1.0

    def test_normals_moments(self):
        z = RngStream(11, 0).normals(200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    @pytest.mark.parametrize("seed,stream", [(-1, 0), (0, -1), (1 << 64, 0), (0, 1 << 64)])
    def test_key_bounds(self, seed, stream):
        with pytest.raises(ValueError):
            RngStream(seed, stream)


class TestSampleBeta:
    def test_uniform_case(self):
        draws = sample_beta(BetaParams(1, 1), RngStream(42, 0), size=1_000_000)
        assert draws.min() > 0.0 and draws.max() < 1.0
        assert draws.mean() == pytest.approx(0.5, abs=0.002)

    def test_heavy_cohort_mean(self):
        mean, var = beta_mean_var(BetaParams(61, 1411))
        draws = sample_beta(BetaParams(61, 1411), RngStream(42, 1), size=1_000_000)
        se = math.sqrt(var / 1_000_000)
        assert abs(draws.mean() - mean) < 4.0 * se

    def test_shape_below_one(self):
        draws = sample_beta(BetaParams(0.5, 0.5), RngStream(42, 2), size=200_000)
        assert draws.min() > 0.0 and draws.max() < 1.0
        se = math.sqrt(0.125 / 200_000)
        assert abs(draws.mean() - 0.5) < 4.0 * se

    def test_scalar_draw_reproducible(self):
        x = sample_beta(BetaParams(2, 29), RngStream(7, 3))
        y = sample_beta(BetaParams(2, 29), RngStream(7, 3))
        assert isinstance(x, float) and 0.0 < x < 1.0
        assert x == y

    def test_matches_cdf_by_ks(self):
        # distributional consistency between the sampler and beta_cdf:
        # KS statistic below the 0.1% critical value for 20 parameter pairs
        n = 100_000
        critical = 1.94947 / math.sqrt(n)
        meta = np.random.default_rng(2024)
        for trial in range(20):
            a = float(10.0 ** meta.uniform(-0.3, 2.7))
            b = float(10.0 ** meta.uniform(-0.3, 2.7))
            p = BetaParams(a, b)
            draws = np.sort(sample_beta(p, RngStream(1000 + trial, 0), size=n))
            cdf = beta_cdf(draws, p)
            grid = np.arange(1, n + 1) / n
            d_stat = max(np.max(np.abs(cdf - grid)), np.max(np.abs(cdf - (grid - 1.0 / n))))
            assert d_stat < critical, f"KS {d_stat:.5f} for Beta({a:.3g},{b:.3g})"


class TestBetaCdf:
    def test_boundaries(self):
        p = BetaParams(3, 12)
        assert beta_cdf(0.0, p) == 0.0
        assert beta_cdf(1.0, p) == 1.0

    def test_uniform_median(self):
        assert beta_cdf(0.5, BetaParams(1, 1)) == pytest.approx(0.5, abs=1e-14)

    def test_against_quadrature(self):
        # 1e7-point trapezoid of the density as an independent oracle
        p = BetaParams(3, 12)
        x = np.linspace(0.0, 0.2, 10_000_001)
        log_norm = log_gamma(15.0) - log_gamma(3.0) - log_gamma(12.0)
        density = np.zeros_like(x)
        density[1:] = np.exp(log_norm + 2.0 * np.log(x[1:]) + 11.0 * np.log1p(-x[1:]))
        oracle = np.trapezoid(density, x)
        assert beta_cdf(0.2, p) == pytest.approx(oracle, abs=1e-6)

    def test_monotone_in_x(self):
        meta = np.random.default_rng(99)
        xs = np.linspace(0.0, 1.0, 100)
        for _ in range(1000):
            a = float(10.0 ** meta.uniform(-1.0, 3.0))
            b = float(10.0 ** meta.uniform(-1.0, 3.0))
            values = beta_cdf(xs, BetaParams(a, b))
            assert np.all(np.diff(values) >= -1e-13)

    @pytest.mark.parametrize("x", [-0.1, 1.1])
    def test_domain_error(self, x):
        with pytest.raises(ValueError):
            beta_cdf(x, BetaParams(2, 2))

    def test_extreme_shapes(self):
        # the lopsided shapes this package actually produces
        p = BetaParams(1.0, 2716.0)
        mid = beta_cdf(math.log(2.0) / 2716.0, p)  # median of Beta(1, b) ~ ln 2 / b
        assert mid == pytest.approx(0.5, abs=1e-3)


class TestBinomialTail:
    def test_full_support(self):
        assert binomial_tail_le(29, 29, 0.5) == 1.0

    def test_single_trial(self):
        assert binomial_tail_le(1, 0, 0.3) == pytest.approx(0.7, abs=1e-12)

    def test_closed_form(self):
        # P(X <= 1) for Binomial(29, t) is (1-t)^28 (1 + 28 t)
        theta = 0.09
        expected = (1.0 - theta) ** 28 * (1.0 + 28.0 * theta)
        assert binomial_tail_le(29, 1, theta) == pytest.approx(expected, abs=1e-10)

    def test_complements_sum_to_one(self):
        meta = np.random.default_rng(7)
        for _ in range(200):
            n = int(meta.integers(1, 3000))
            d = int(meta.integers(0, n))  # keep d < n so both tails are proper
            theta = float(meta.uniform(0.001, 0.999))
            le = binomial_tail_le(n, d, theta)
            ge_next = beta_cdf(theta, BetaParams(d + 1, n - d))  # P(X >= d+1)
            assert le + ge_next == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n,d,theta", [(10, 11, 0.5), (10, -1, 0.5),
                                           (10, 5, 0.0), (10, 5, 1.0)])
    def test_domain_errors(self, n, d, theta):
        with pytest.raises(ValueError):
            binomial_tail_le(n, d, theta)


class TestSolveMonotone:
    def test_identity(self):
        assert solve_monotone(lambda x: x, 0.25, 0.0, 1.0) == pytest.approx(0.25, abs=1e-12)

    def test_decreasing_closed_form(self):
        # (1 - x)^100 = 0.25  =>  x = 1 - 0.25^(1/100)
        root = solve_monotone(lambda x: (1.0 - x) ** 100, 0.25, 0.0, 1.0)
        assert root == pytest.approx(1.0 - 0.25 ** 0.01, abs=1e-10)

    def test_binomial_tail_inversion(self):
        root = solve_monotone(lambda t: binomial_tail_le(29, 1, t), 0.25, 1e-9, 1.0 - 1e-9)
        expected = solve_monotone(lambda t: (1.0 - t) ** 28 * (1.0 + 28.0 * t),
                                  0.25, 1e-9, 1.0 - 1e-9)
        assert root == pytest.approx(expected, abs=1e-9)
        assert root == pytest.approx(0.0900, abs=5e-4)

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            solve_monotone(lambda x: x, 2.0, 0.0, 1.0)

    def test_endpoint_hit(self):
        assert solve_monotone(lambda x: x, 0.0, 0.0, 1.0) == 0.0
