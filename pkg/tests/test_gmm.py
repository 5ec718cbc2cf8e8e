import numpy as np
import pytest

from salientcut import gmm
from salientcut.errors import UnfittedModel


def two_blobs(rng, n=400, sep=10.0, std=0.5):
    a = rng.normal([30.0, 5.0, 5.0], std, (n, 3))
    b = rng.normal([30.0 + sep, 5.0, 5.0], std, (n, 3))
    return a, b


class TestFitGmm:
    def test_identical_samples_k1(self):
        x = np.tile([42.0, 1.0, -3.0], (50, 1))
        model = gmm.fit_gmm(x, 1, seed=0)
        assert np.allclose(model.means[0], [42.0, 1.0, -3.0])
        assert np.allclose(np.linalg.eigvalsh(model.covs[0]), gmm.COV_FLOOR)

    def test_two_blob_recovery(self, rng):
        a, b = two_blobs(rng)
        x = np.vstack([a, b])
        model = gmm.fit_gmm(x, 2, seed=7)
        sample_means = sorted([a.mean(axis=0)[0], b.mean(axis=0)[0]])
        fit_means = sorted(model.means[:, 0])
        assert abs(fit_means[0] - sample_means[0]) < 0.1
        assert abs(fit_means[1] - sample_means[1]) < 0.1

    def test_loglik_nondecreasing(self, rng):
        x = rng.normal(0, 10, (300, 3))
        model = gmm.fit_gmm(x, 4, seed=3)
        lls = np.array(model.log_likelihoods)
        assert len(lls) >= 1
        assert (np.diff(lls) >= -1e-9).all()

    def test_weights_sum_to_one(self, rng):
        x = rng.normal(0, 10, (200, 3))
        model = gmm.fit_gmm(x, 5, seed=0)
        assert abs(model.weights.sum() - 1.0) < 1e-9

    def test_covariance_floor(self, rng):
        x = rng.normal(0, 1e-6, (100, 3))
        model = gmm.fit_gmm(x, 2, seed=0)
        for cov in model.covs:
            assert np.linalg.eigvalsh(cov).min() >= gmm.COV_FLOOR * (1 - 1e-9)

    def test_too_few_samples_falls_back(self):
        x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        model = gmm.fit_gmm(x, 5, seed=0)
        assert model.n_components == 2

    def test_empty_raises(self):
        with pytest.raises(UnfittedModel):
            gmm.fit_gmm(np.empty((0, 3)), 2, seed=0)

    def test_deterministic_for_seed(self, rng):
        x = rng.normal(0, 10, (300, 3))
        m1 = gmm.fit_gmm(x, 3, seed=11)
        m2 = gmm.fit_gmm(x, 3, seed=11)
        assert (m1.means == m2.means).all()
        assert (m1.covs == m2.covs).all()


class TestLogLikelihood:
    def test_matches_scipy_reference(self, rng):
        from scipy.stats import multivariate_normal
        x = rng.normal(0, 5, (50, 3))
        model = gmm.fit_gmm(x, 2, seed=0)
        got = gmm.log_likelihood_per_pixel(model, x)
        expect = np.log(sum(
            w * multivariate_normal.pdf(x, mean=mu, cov=cov)
            for w, mu, cov in zip(model.weights, model.means, model.covs)))
        assert np.allclose(got, expect, atol=1e-9)
