import math

import numpy as np
import pytest
from scipy import special, stats

from stablebox.lepage import (
    LePageEnvironment,
    centering_constant,
    centering_constants,
    exp_partial_sums,
    lepage_terms,
    sample_environment,
    sample_eta_with_max,
    sample_stable_bridge,
    sample_stable_bridges,
    truncation_diagnostic,
)
from stablebox.rng import RngStream
from stablebox.stable import StableParams, TailParams, sample_stable
from stablebox.stats import ks_one_sample, ks_two_sample


class TestPartialSums:
    def test_single_draw(self):
        s = exp_partial_sums(1, RngStream(0))
        assert s.shape == (1,) and s[0] > 0

    def test_law_of_large_numbers(self):
        gen = RngStream(1).generator()
        s100 = np.array([exp_partial_sums(100, gen)[-1] for _ in range(10_000)])
        assert abs(np.mean(s100 / 100) - 1.0) < 0.03

    def test_monotone(self):
        s = exp_partial_sums(10_000, RngStream(2))
        assert np.all(np.diff(s) > 0)

    def test_k_validated(self):
        with pytest.raises(ValueError):
            exp_partial_sums(0, RngStream(0))

    def test_environment_validation(self):
        with pytest.raises(ValueError):
            LePageEnvironment([1.0, 0.5], [1.0, 2.0])
        with pytest.raises(ValueError):
            LePageEnvironment([1.0, 2.0], [1.0])
        env = sample_environment(5, RngStream(3))
        with pytest.raises(ValueError):
            env.s[0] = 1.0


class TestTerms:
    def test_examples(self):
        np.testing.assert_allclose(lepage_terms([1, 2, 4], 1.0), [1, 0.5, 0.25])
        np.testing.assert_allclose(lepage_terms([1, 4], 0.5), [1, 1 / 16])

    def test_decreasing(self):
        z = lepage_terms(exp_partial_sums(1000, RngStream(4)), 1.7)
        assert np.all(np.diff(z) < 0)


class TestCentering:
    def test_riemann_oracle_k1(self):
        # midpoint rule on [1, 60] with 10**6 cells; the tail beyond 60 is below e**-60
        h = 59.0 / 1_000_000
        x = 1.0 + h * (np.arange(1_000_000) + 0.5)
        riemann = float(np.sum(x ** (-2.0 / 3.0) * np.exp(-x)) * h)
        assert centering_constant(1, 1.5) == pytest.approx(riemann, abs=1e-8)

    @pytest.mark.parametrize("k", [1, 2, 5, 50, 1000])
    def test_gamma_ratio_bound(self, k):
        a = 1.5
        assert centering_constant(k, a) <= math.exp(special.gammaln(k - 1 / a) - special.gammaln(k))

    def test_complement_vanishes(self):
        # E[Z_k 1{Z_k > 1}] needs S_k < 1, which has probability below 1/k!
        k, a = 50, 1.5
        full = math.exp(special.gammaln(k - 1 / a) - special.gammaln(k))
        assert full - centering_constant(k, a) < 1e-10

    def test_decay_rate(self):
        # c_k ~ k**(-1/alpha) with an O(1/k) correction
        a = 1.5
        for k in (100, 1000, 10_000):
            assert abs(centering_constant(k, a) * k ** (1 / a) - 1.0) < 1.0 / k

    @pytest.mark.parametrize("alpha", [1.05, 1.5, 1.95])
    def test_closed_form_agrees_with_quadrature(self, alpha):
        ks = [1, 2, 3, 10, 57, 400, 5000]
        closed = centering_constants(max(ks), alpha)
        for k in ks:
            assert closed[k - 1] == pytest.approx(centering_constant(k, alpha), rel=1e-10)

    @pytest.mark.parametrize("alpha", [1.0, 0.7, 2.0])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            centering_constant(3, alpha)


class TestEta:
    def test_positive_one_sided(self):
        eta, _ = sample_eta_with_max(TailParams(0.7, 1.0), 1000, RngStream(5), size=1000, remainder="none")
        assert np.all(eta > 0)

    def test_scalar_return(self):
        eta, z = sample_eta_with_max(TailParams(1.5, 0.5), 100, RngStream(6))
        assert isinstance(eta, float) and isinstance(z, float) and z > 0

    @pytest.mark.parametrize("tp", [TailParams(0.5, 0.5), TailParams(1.0, 0.5), TailParams(1.5, 0.5), TailParams(1.5, 0.8)])
    def test_strict_stability(self, tp):
        eta, _ = sample_eta_with_max(tp, 1000, RngStream(7), size=300_000)
        pooled = (eta[:100_000] + eta[100_000:200_000]) / 2 ** (1 / tp.alpha)
        assert ks_two_sample(pooled, eta[200_000:]) < 0.02

    def test_max_is_unit_exponential(self):
        tp = TailParams(1.3, 0.6)
        _, z = sample_eta_with_max(tp, 10, RngStream(8), size=100_000)
        assert ks_one_sample(z ** -tp.alpha, stats.expon.cdf) < 0.01

    def test_symmetric_mean_zero(self):
        eta, _ = sample_eta_with_max(TailParams(1.7, 0.5), 1000, RngStream(9), size=100_000)
        se = eta.std(ddof=1) / math.sqrt(eta.size)
        assert abs(eta.mean()) < 3 * se

    def test_asymmetric_mean_zero(self):
        # centred per side so that the limit is strictly stable: E[eta] = 0
        eta, _ = sample_eta_with_max(TailParams(1.8, 0.9), 1000, RngStream(10), size=100_000)
        se = eta.std(ddof=1) / math.sqrt(eta.size)
        assert abs(eta.mean()) < 3 * se

    def test_matches_direct_sampler_after_iqr(self):
        tp = TailParams(1.5, 0.5)
        eta, _ = sample_eta_with_max(tp, 1000, RngStream(11), size=100_000)
        direct = sample_stable(StableParams(1.5), 100_000, RngStream(12))
        assert ks_two_sample(eta / stats.iqr(eta), direct / stats.iqr(direct)) < 0.03

    def test_gaussian_remainder_helps_at_small_k(self):
        tp = TailParams(1.8, 0.5)
        ref = sample_stable(StableParams(1.8), 100_000, RngStream(13))
        scaled = lambda v: v / stats.iqr(v)
        with_rem, _ = sample_eta_with_max(tp, 20, RngStream(14), size=100_000, remainder="gaussian")
        without, _ = sample_eta_with_max(tp, 20, RngStream(14), size=100_000, remainder="none")
        assert ks_two_sample(scaled(with_rem), scaled(ref)) < ks_two_sample(scaled(without), scaled(ref))

    def test_max_dominates_terms(self):
        # M is the largest weighted jump, so it bounds every single weighted term
        tp = TailParams(1.2, 0.7)
        env = sample_environment(1000, RngStream(15))
        left = tp.w1 * lepage_terms(env.s, tp.alpha)
        right = tp.w2 * lepage_terms(env.s_star, tp.alpha)
        m = max(left[0], right[0])
        assert m >= left.max() and m >= right.max()

    def test_reproducible(self):
        tp = TailParams(1.2, 0.7)
        a = sample_eta_with_max(tp, 500, RngStream(16), size=10)
        b = sample_eta_with_max(tp, 500, RngStream(16), size=10)
        assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_eta_with_max(TailParams(1.2), 10, RngStream(0), remainder="other")
        with pytest.raises(ValueError):
            sample_eta_with_max(TailParams(1.2), 10, None)


class TestBridge:
    def test_endpoints_exact(self):
        path = sample_stable_bridge(TailParams(1.2, 0.7), [0, 0.3, 0.5, 1], 200, RngStream(17))
        assert path.b_values[0] == 0.0 and path.b_values[-1] == 0.0
        assert path.z > 0
        np.testing.assert_allclose(path.b_values[1:-1], (path.w_values - path.grid * path.w_values[-1])[1:-1])

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            sample_stable_bridge(TailParams(1.2), [0, 0.5], 10, RngStream(0))
        with pytest.raises(ValueError):
            sample_stable_bridge(TailParams(1.2), [0, 0.6, 0.4, 1], 10, RngStream(0))

    def test_endpoint_is_eta(self):
        tp = TailParams(1.5, 0.5)
        grid = np.linspace(0, 1, 5)
        w, _, _ = sample_stable_bridges(tp, grid, 100_000, RngStream(18), k=500)
        eta, _ = sample_eta_with_max(tp, 500, RngStream(19), size=100_000)
        assert ks_two_sample(w[:, -1], eta) < 0.02

    def test_grid_refinement_consistent(self):
        tp = TailParams(1.5, 0.5)
        fine, _, _ = sample_stable_bridges(tp, [0, 0.25, 0.5, 1], 100_000, RngStream(20), k=500)
        coarse, _, _ = sample_stable_bridges(tp, [0, 0.5, 1], 100_000, RngStream(21), k=500)
        assert ks_two_sample(fine[:, 2], coarse[:, 1]) < 0.02


class TestTruncationDiagnostic:
    def test_full_length_is_remainder_only(self):
        tp = TailParams(1.5, 0.5)
        env = sample_environment(100, RngStream(22))
        e = 2 / 1.5
        expected = sum(w * s[-1] ** (1 - e) / (e - 1) for w, s in ((tp.q ** e, env.s), (tp.p ** e, env.s_star)))
        assert truncation_diagnostic(env, tp, 100) == pytest.approx(expected)

    def test_decreasing_in_k(self):
        tp = TailParams(1.2, 0.7)
        env = sample_environment(2000, RngStream(23))
        vals = [truncation_diagnostic(env, tp, k) for k in (0, 1, 10, 100, 1000, 2000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_cauchy_ratio(self):
        tp = TailParams(1.0, 0.5)
        env = sample_environment(10_000, RngStream(24))
        assert truncation_diagnostic(env, tp, 100) > 5 * truncation_diagnostic(env, tp, 1000)

    def test_too_short(self):
        env = sample_environment(10, RngStream(25))
        with pytest.raises(ValueError):
            truncation_diagnostic(env, TailParams(1.2), 11)
