"""Chain smoothing against a dense joint-Gaussian oracle.

The oracle builds the full T x T precision matrix of the latent chain given
all observations and inverts it; the recursions must reproduce its marginals.
"""

import numpy as np
import pytest

from trendweave import kalman


def dense_marginals(obs, obs_var, sigma2, init_mean=0.0, init_variance=None):
    """Exact posterior marginals via the tridiagonal precision matrix."""
    obs = np.asarray(obs, dtype=float)
    obs_var = np.asarray(obs_var, dtype=float)
    if init_variance is None:
        init_variance = sigma2 * 1e3
    n = len(obs)
    prec = np.zeros((n, n))
    b = np.zeros(n)
    # x_1 ~ N(init_mean, init_variance + sigma2), x_t = x_{t-1} + N(0, sigma2)
    prec[0, 0] += 1.0 / (init_variance + sigma2)
    b[0] += init_mean / (init_variance + sigma2)
    for t in range(1, n):
        prec[t - 1, t - 1] += 1.0 / sigma2
        prec[t, t] += 1.0 / sigma2
        prec[t - 1, t] -= 1.0 / sigma2
        prec[t, t - 1] -= 1.0 / sigma2
    for t in range(n):
        prec[t, t] += 1.0 / obs_var[t]
        b[t] += obs[t] / obs_var[t]
    cov = np.linalg.inv(prec)
    return cov @ b, np.diag(cov)


def random_chain(rng, n):
    obs = rng.normal(0.0, 2.0, size=n)
    obs_var = rng.uniform(0.05, 3.0, size=n)
    sigma2 = float(rng.uniform(0.001, 1.0))
    return kalman.Chain(obs, obs_var, sigma2)


class TestForward:
    def test_single_slice_matches_precision_algebra(self):
        # sigma2=0.005, V0=sigma2*1e3=5, one obs at 1 with unit noise.
        m, v = kalman.forward([1.0], [1.0], 0.005)
        prior_var = 5.0 + 0.005
        post_prec = 1.0 / prior_var + 1.0
        expected_var = 1.0 / post_prec
        expected_mean = expected_var * (1.0 / 1.0)
        assert m[0] == pytest.approx(expected_mean, abs=1e-12)
        assert v[0] == pytest.approx(expected_var, abs=1e-12)
        assert m[0] == pytest.approx(0.8335, abs=5e-4)
        assert v[0] == pytest.approx(0.8334, abs=5e-4)

    def test_constant_observations_converge_monotonically(self):
        c = 3.0
        m, _ = kalman.forward(np.full(12, c), np.ones(12), 0.1)
        err = np.abs(m - c)
        assert np.all(np.diff(err) < 0)
        assert err[-1] < err[0]

    def test_uninformative_observations_keep_prior_mean(self):
        m, _ = kalman.forward(np.full(5, 7.0), np.full(5, 1e12), 0.01, init_mean=0.5)
        assert np.allclose(m, 0.5, atol=1e-6)

    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            kalman.forward([1.0], [0.0], 0.1)
        with pytest.raises(ValueError):
            kalman.forward([1.0], [1.0], 0.0)


class TestBackward:
    def test_single_slice_boundary(self):
        chain = kalman.Chain([2.0], [0.5], 0.01)
        sm = kalman.smooth(chain)
        assert sm.mean[0] == sm.filtered_mean[0]
        assert sm.variance[0] == sm.filtered_variance[0]

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        for n in range(1, 7):
            for _ in range(20):
                chain = random_chain(rng, n)
                sm = kalman.smooth(chain)
                mean, var = dense_marginals(chain.obs, chain.obs_variance, chain.sigma2)
                np.testing.assert_allclose(sm.mean, mean, atol=1e-8)
                np.testing.assert_allclose(sm.variance, var, atol=1e-8)

    def test_huge_process_variance_decouples_slices(self):
        chain = kalman.Chain([1.0, -2.0, 0.5], [0.3, 0.3, 0.3], 1e12)
        sm = kalman.smooth(chain)
        np.testing.assert_allclose(sm.mean, sm.filtered_mean, rtol=1e-6)

    def test_smoothed_variance_never_exceeds_filtered(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            chain = random_chain(rng, int(rng.integers(1, 9)))
            sm = kalman.smooth(chain)
            assert np.all(sm.variance <= sm.filtered_variance + 1e-12)
            assert np.all(sm.variance > 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            kalman.backward(np.zeros(3), np.ones(2), 0.1)


class TestVectorized:
    def test_trailing_axes_match_scalar_chains(self):
        rng = np.random.default_rng(3)
        obs = rng.normal(size=(4, 6))
        obs_var = rng.uniform(0.1, 2.0, size=(4, 6))
        sigma2 = 0.05
        m, v = kalman.forward(obs, obs_var, sigma2)
        mean, var = kalman.backward(m, v, sigma2)
        for w in range(6):
            sm = kalman.smooth(kalman.Chain(obs[:, w], obs_var[:, w], sigma2))
            np.testing.assert_array_equal(sm.mean, mean[:, w])
            np.testing.assert_array_equal(sm.variance, var[:, w])


class TestZeta:
    def test_all_zero_inputs(self):
        assert kalman.zeta(np.zeros(9), np.zeros(9)) == pytest.approx(9.0)

    def test_forced_arithmetic(self):
        value = kalman.zeta(np.log([2.0, 3.0]), np.zeros(2))
        assert value == pytest.approx(5.0, abs=1e-12)

    def test_matches_extended_precision_sum(self):
        rng = np.random.default_rng(5)
        mean = rng.normal(0.0, 3.0, size=10)
        var = rng.uniform(0.0, 2.0, size=10)
        direct = float(np.sum(np.exp(mean.astype(np.longdouble)
                                     + 0.5 * var.astype(np.longdouble))))
        assert kalman.zeta(mean, var) == pytest.approx(direct, rel=1e-12)

    def test_shift_keeps_large_means_finite(self):
        # Unshifted exp would overflow; the shifted path reports the overflow
        # of the final value rather than returning inf.
        with pytest.raises(OverflowError):
            kalman.zeta(np.array([800.0, 801.0]), np.zeros(2))

    def test_monotone_in_mean(self):
        mean = np.array([0.1, -0.4, 2.0])
        var = np.array([0.2, 0.0, 1.0])
        base = kalman.zeta(mean, var)
        for i in range(3):
            bumped = mean.copy()
            bumped[i] += 1e-3
            assert kalman.zeta(bumped, var) > base

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            kalman.zeta(np.zeros(3), np.zeros(2))


class TestOneStepExtend:
    def test_agrees_with_full_smoother_on_last_two_slices(self):
        rng = np.random.default_rng(13)
        obs = rng.normal(size=5)
        obs_var = rng.uniform(0.2, 1.5, size=5)
        sigma2 = 0.3
        m4, v4 = kalman.forward(obs[:4], obs_var[:4], sigma2)
        _, _, mean_new, var_new, mean_prev, var_prev = kalman.one_step_extend(
            m4[-1], v4[-1], obs[4], obs_var[4], sigma2)

        m5, v5 = kalman.forward(obs, obs_var, sigma2)
        full_mean, full_var = kalman.backward(m5, v5, sigma2)
        # slice T+1 and the re-smoothed slice T agree with the full pass
        assert mean_new == pytest.approx(full_mean[4], abs=1e-12)
        assert var_new == pytest.approx(full_var[4], abs=1e-12)
        assert mean_prev == pytest.approx(full_mean[3], abs=1e-12)
        assert var_prev == pytest.approx(full_var[3], abs=1e-12)
        # earlier slices are where the truncation shows up
        partial_mean, _ = kalman.backward(m4, v4, sigma2)
        assert partial_mean[1] != pytest.approx(full_mean[1], abs=1e-15)

    def test_uninformative_new_slice_stays_at_filtered_mean(self):
        _, _, mean_new, _, _, _ = kalman.one_step_extend(2.5, 0.4, 100.0, 1e12, 0.05)
        assert mean_new == pytest.approx(2.5, abs=1e-6)

    def test_zero_process_variance_rejected(self):
        with pytest.raises(ValueError):
            kalman.one_step_extend(0.0, 1.0, 1.0, 1.0, 0.0)


class TestInitialStateSmoothing:
    def test_matches_dense_oracle_with_explicit_initial_state(self):
        # Augment the dense system with x_0 itself to check the extra step.
        rng = np.random.default_rng(23)
        obs = rng.normal(size=3)
        obs_var = rng.uniform(0.2, 1.0, size=3)
        sigma2, v0 = 0.4, 0.4 * 1e3
        n = 4  # x_0..x_3
        prec = np.zeros((n, n))
        b = np.zeros(n)
        prec[0, 0] += 1.0 / v0
        for t in range(1, n):
            prec[t - 1, t - 1] += 1.0 / sigma2
            prec[t, t] += 1.0 / sigma2
            prec[t - 1, t] -= 1.0 / sigma2
            prec[t, t - 1] -= 1.0 / sigma2
        for t in range(1, n):
            prec[t, t] += 1.0 / obs_var[t - 1]
            b[t] += obs[t - 1] / obs_var[t - 1]
        cov = np.linalg.inv(prec)
        mean = cov @ b

        m, v = kalman.forward(obs, obs_var, sigma2)
        sm_mean, sm_var = kalman.backward(m, v, sigma2)
        mean_0, var_0 = kalman.smooth_initial_state(sm_mean[0], sm_var[0], sigma2)
        assert mean_0 == pytest.approx(mean[0], abs=1e-8)
        assert var_0 == pytest.approx(cov[0, 0], abs=1e-8)
