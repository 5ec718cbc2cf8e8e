"""Gaussian mixture fitting for foreground/background color models.

Seeded k-means++ initialization followed by EM with a covariance floor.
The fit records the per-iteration log-likelihood so monotonicity can be
checked directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnfittedModel

COV_FLOOR = 1e-6
EM_TOL = 1e-4
EM_MAX_ITERS = 100


@dataclass
class GmmModel:
    weights: np.ndarray  # (K,)
    means: np.ndarray    # (K, 3)
    covs: np.ndarray     # (K, 3, 3)
    log_likelihoods: list = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return len(self.weights)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = x[rng.integers(n)]
        else:
            centers[i] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((x - centers[i]) ** 2).sum(axis=1))
    return centers


def _component_logpdf(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """(n, K) matrix of log(w_k) + log N(x | mu_k, cov_k)."""
    d = x.shape[1]
    precs = np.linalg.inv(model.covs)
    _, logdets = np.linalg.slogdet(model.covs)
    out = np.empty((len(x), model.n_components))
    const = d * np.log(2.0 * np.pi)
    for k in range(model.n_components):
        diff = x - model.means[k]
        maha = ((diff @ precs[k]) * diff).sum(axis=1)
        out[:, k] = np.log(model.weights[k]) - 0.5 * (const + logdets[k] + maha)
    return out


def log_likelihood_per_pixel(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """Per-sample log p(x) under the mixture."""
    if model.n_components == 0:
        raise UnfittedModel("empty model")
    lp = _component_logpdf(model, x)
    mx = lp.max(axis=1)
    return mx + np.log(np.exp(lp - mx[:, None]).sum(axis=1))


def _floor_cov(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, COV_FLOOR)
    return (vecs * vals) @ vecs.T


def fit_gmm(samples: np.ndarray, k: int, seed: int) -> GmmModel:
    """Fit a K-component full-covariance mixture to Nx3 samples.

    Falls back to K' = sample count when fewer than K samples exist.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("samples must be (n, d)")
    n = len(x)
    if n == 0:
        raise UnfittedModel("no samples")
    k = min(k, n)
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(x, k, rng)

    # hard-assignment bootstrap of the mixture parameters
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    weights = np.empty(k)
    means = np.empty((k, x.shape[1]))
    covs = np.empty((k, x.shape[1], x.shape[1]))
    for j in range(k):
        members = x[assign == j]
        if len(members) == 0:
            members = x[[int(d2[:, j].argmin())]]
        weights[j] = max(len(members), 1) / n
        means[j] = members.mean(axis=0)
        diff = members - means[j]
        covs[j] = _floor_cov(diff.T @ diff / len(members))
    weights /= weights.sum()
    model = GmmModel(weights=weights, means=means, covs=covs)

    prev_ll = -np.inf
    for _ in range(EM_MAX_ITERS):
        lp = _component_logpdf(model, x)
        mx = lp.max(axis=1)
        log_norm = mx + np.log(np.exp(lp - mx[:, None]).sum(axis=1))
        ll = float(log_norm.mean())
        model.log_likelihoods.append(ll)
        resp = np.exp(lp - log_norm[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        model.weights = nk / nk.sum()
        model.means = (resp.T @ x) / nk[:, None]
        for j in range(k):
            diff = x - model.means[j]
            cov = (resp[:, j][:, None] * diff).T @ diff / nk[j]
            model.covs[j] = _floor_cov(cov)
        if ll - prev_ll < EM_TOL and np.isfinite(prev_ll):
            break
        prev_ll = ll
    return model
