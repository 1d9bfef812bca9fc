import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from glshrink import DomainError, NumericError, UnsupportedKernelError, UsageError
from glshrink.kernels import PriorKernel, horseshoe, strawderman_berger, inverse_gamma_kernel
from glshrink.shrinkage import (
    QuadratureConfig,
    ShrinkageQuery,
    expected_kappa,
    expected_one_minus_kappa,
    importance_oracle,
    large_a_upper_rate,
    log_marginal_unnorm,
    log_posterior_kappa_density_unnorm,
    shrinkage_grid,
    type1_bound_rate,
)


def half_cauchy_oracle(x, tau):
    """Horseshoe weight and log marginal straight from the half-Cauchy density of lambda.

    Integrates over u = log(lambda) so no (a, L) representation is involved.
    """
    def lik(u):
        lam2 = math.exp(2 * u)
        v = 1 + tau * tau * lam2
        # half-Cauchy density in lambda times the Jacobian d lambda / du
        prior = 2 / (math.pi * (1 + lam2)) * math.exp(u)
        return math.exp(-x * x / (2 * v)) / math.sqrt(2 * math.pi * v) * prior, tau * tau * lam2 / v

    peak = math.log(max(1.0, abs(x)) / tau)
    pts = [-5.0, 0.0, peak]
    den = integrate.quad(lambda u: lik(u)[0], -60, 60 + peak, points=pts, limit=500, epsabs=0, epsrel=1e-12)[0]
    num = integrate.quad(lambda u: lik(u)[0] * lik(u)[1], -60, 60 + peak, points=pts, limit=500, epsabs=0, epsrel=1e-12)[0]
    return num / den, math.log(den)


class TestKappaDensity:
    def test_hand_value(self, hs):
        value = log_posterior_kappa_density_unnorm(ShrinkageQuery(0.0, 0.1, hs), 0.5)
        assert value == pytest.approx(1.5 * math.log(2) + math.log(100 / 101), abs=1e-12)
        assert value == pytest.approx(1.029766, abs=1e-5)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, -0.1, 1.5])
    def test_open_interval(self, hs, kappa):
        with pytest.raises(DomainError):
            log_posterior_kappa_density_unnorm(ShrinkageQuery(0.0, 0.1, hs), kappa)

    def test_x_dependence(self, hs):
        d0 = log_posterior_kappa_density_unnorm(ShrinkageQuery(0.0, 0.1, hs), 0.9)
        d3 = log_posterior_kappa_density_unnorm(ShrinkageQuery(3.0, 0.1, hs), 0.9)
        assert d3 - d0 == pytest.approx(0.45, abs=1e-12)

    def test_kappa_form_agrees_with_t_form(self, hs):
        """Posterior mean of 1 - kappa by integrating the kappa density directly."""
        for x, tau in [(0.0, 0.1), (2.0, 0.1), (4.0, 0.05)]:
            q = ShrinkageQuery(x, tau, hs)

            def dens(k):
                return math.exp(log_posterior_kappa_density_unnorm(q, k))

            num = integrate.quad(lambda k: (1 - k) * dens(k), 0, 1, limit=400, epsrel=1e-11)[0]
            den = integrate.quad(dens, 0, 1, limit=400, epsrel=1e-11)[0]
            assert num / den == pytest.approx(expected_one_minus_kappa(q), rel=1e-7)


class TestQuery:
    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 2.0])
    def test_tau_range(self, hs, tau):
        with pytest.raises(DomainError):
            ShrinkageQuery(0.0, tau, hs)

    def test_x_finite(self, hs):
        with pytest.raises(DomainError):
            ShrinkageQuery(math.inf, 0.1, hs)


class TestExpectedShrinkage:
    def test_null_is_shrunk(self, hs):
        value = expected_one_minus_kappa(ShrinkageQuery(0.0, 0.01, hs))
        assert 0 < value < 0.05
        assert expected_kappa(ShrinkageQuery(0.0, 0.01, hs)) > 0.95

    def test_signal_is_kept(self, hs):
        assert expected_one_minus_kappa(ShrinkageQuery(10.0, 0.01, hs)) > 0.9
        assert expected_kappa(ShrinkageQuery(10.0, 0.01, hs)) < 0.1

    @pytest.mark.parametrize("x", [0.3, 2.0, 4.1, 9.0])
    def test_symmetry(self, hs, x):
        assert expected_one_minus_kappa(ShrinkageQuery(x, 0.01, hs)) == expected_one_minus_kappa(
            ShrinkageQuery(-x, 0.01, hs)
        )

    @pytest.mark.parametrize("x", [0.0, 1.0, 3.5, 8.0])
    def test_complement(self, hs, x):
        q = ShrinkageQuery(x, 0.02, hs)
        assert abs(expected_kappa(q) + expected_one_minus_kappa(q) - 1) <= 1e-12

    @pytest.mark.parametrize("x", [0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 15.0])
    @pytest.mark.parametrize("tau", [0.1, 0.01, 0.001])
    def test_half_cauchy_oracle(self, hs, x, tau):
        expected, _ = half_cauchy_oracle(x, tau)
        assert expected_one_minus_kappa(ShrinkageQuery(x, tau, hs)) == pytest.approx(expected, rel=1e-7)

    def test_log_marginal_offset_is_constant(self, hs):
        """log m(x|tau) minus the unnormalized value equals log(K / sqrt(2 pi)) with K = 1/pi."""
        offset = math.log(1 / (math.pi * math.sqrt(2 * math.pi)))
        for x, tau in [(0.0, 0.1), (3.0, 0.01), (7.0, 0.001)]:
            _, log_m = half_cauchy_oracle(x, tau)
            assert log_m - log_marginal_unnorm(ShrinkageQuery(x, tau, hs)) == pytest.approx(offset, abs=1e-8)

    def test_tau_monotone(self, hs, sb, ig):
        taus = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.2, 0.5]
        for kernel in (hs, sb, ig):
            for x in (0.0, 2.0, 4.0, 7.0):
                values = [expected_one_minus_kappa(ShrinkageQuery(x, t, kernel)) for t in taus]
                assert np.all(np.diff(values) >= 0), (kernel.name, x)

    def test_abs_x_monotone(self, hs, sb, ig):
        xs = np.linspace(0, 12, 49)
        for kernel in (hs, sb, ig):
            for tau in (0.1, 0.01, 0.001):
                values = [expected_one_minus_kappa(ShrinkageQuery(x, tau, kernel)) for x in xs]
                assert np.all(np.diff(values) >= 0), (kernel.name, tau)

    @pytest.mark.parametrize("x", [0.0, 10.0, 38.0, 40.0, 200.0, 1e4])
    def test_no_overflow_and_open_range(self, hs, x):
        for tau in (0.5, 1e-3):
            value = expected_one_minus_kappa(ShrinkageQuery(x, tau, hs))
            assert math.isfinite(value)
            assert 0 < value < 1

    def test_non_convergence_carries_partials(self, hs):
        cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=1)
        with pytest.raises(NumericError) as info:
            expected_one_minus_kappa(ShrinkageQuery(3.0, 0.01, hs), cfg)
        assert info.value.numerator is not None
        assert info.value.denominator is not None

    def test_config_validation(self):
        with pytest.raises(UsageError):
            QuadratureConfig(rel_tol=0)


class TestBulkEvaluator:
    @settings(max_examples=40, deadline=None)
    @given(
        x=st.floats(min_value=-30, max_value=30),
        log_tau=st.floats(min_value=math.log(1e-5), max_value=math.log(0.9)),
        which=st.sampled_from(["horseshoe", "sb", "ig"]),
    )
    def test_matches_quadrature(self, x, log_tau, which):
        kernel = {"horseshoe": horseshoe(), "sb": strawderman_berger(), "ig": inverse_gamma_kernel(0.5)}[which]
        tau = math.exp(log_tau)
        q = ShrinkageQuery(x, tau, kernel)
        e, log_den = shrinkage_grid(np.array([x]), tau, kernel)
        assert e[0] == pytest.approx(expected_one_minus_kappa(q), rel=1e-9, abs=1e-14)
        assert log_den[0] == pytest.approx(log_marginal_unnorm(q), abs=1e-9)

    def test_shape_preserved(self, hs):
        x = np.linspace(-3, 3, 12).reshape(3, 4)
        e, ld = shrinkage_grid(x, 0.05, hs)
        assert e.shape == ld.shape == (3, 4)


class TestImportanceOracle:
    @pytest.mark.parametrize("x,tau", [(0.0, 0.01), (4.0, 0.01), (10.0, 0.01), (2.0, 0.1)])
    def test_agrees_with_quadrature(self, hs, x, tau):
        q = ShrinkageQuery(x, tau, hs)
        estimate, se = importance_oracle(q, 400_000, seed=11)
        assert abs(estimate - expected_one_minus_kappa(q)) <= max(1e-3, 3 * se)

    def test_reproducible(self, ig):
        q = ShrinkageQuery(1.0, 0.1, ig)
        assert importance_oracle(q, 20_000, 5) == importance_oracle(q, 20_000, 5)
        assert importance_oracle(q, 20_000, 5) != importance_oracle(q, 20_000, 6)

    def test_needs_enough_draws(self, hs):
        with pytest.raises(UsageError):
            importance_oracle(ShrinkageQuery(0.0, 0.1, hs), 1000, 1)

    def test_needs_sampler(self):
        kernel = PriorKernel(a=0.5, L=lambda t: t / (1 + t), name="no-sampler")
        with pytest.raises(UnsupportedKernelError):
            importance_oracle(ShrinkageQuery(0.0, 0.1, kernel), 10_000, 1)


class TestRates:
    def test_type1_value(self, hs):
        assert type1_bound_rate(hs, 0.01) == pytest.approx(0.003295, abs=5e-7)

    def test_type1_decreasing(self, hs):
        rates = [type1_bound_rate(hs, t) for t in (0.1, 0.01, 0.001)]
        assert rates[0] > rates[1] > rates[2]

    @pytest.mark.parametrize("tau", [0.5, math.exp(-1), 0.0])
    def test_type1_domain(self, hs, tau):
        with pytest.raises(DomainError):
            type1_bound_rate(hs, tau)

    def test_large_a_intermediate(self):
        from glshrink.kernels import tpbn_kernel

        assert large_a_upper_rate(tpbn_kernel(0.75, 1.0), 0.0, 0.1) == pytest.approx(-3.45388, abs=1e-5)

    def test_large_a_at_least_one(self, tpbn11):
        # 2 ln(0.1) + ln(ln 10)
        assert large_a_upper_rate(tpbn11, 0.0, 0.1) == pytest.approx(-3.771138, abs=1e-6)

    def test_large_a_rejects_horseshoe(self, hs):
        with pytest.raises(UsageError):
            large_a_upper_rate(hs, 0.0, 0.1)

    def test_large_a_bounds_weight_shape(self, tpbn11):
        """Weight over the rate stays bounded as tau shrinks (constants omitted)."""
        ratios = []
        for tau in (1e-2, 1e-3, 1e-4):
            w = expected_one_minus_kappa(ShrinkageQuery(1.0, tau, tpbn11))
            ratios.append(w / math.exp(large_a_upper_rate(tpbn11, 1.0, tau)))
        assert max(ratios) / min(ratios) < 3
