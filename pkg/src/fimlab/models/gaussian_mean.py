"""Multivariate Gaussian with unknown mean and known covariance.

The negative log-likelihood is quadratic in the mean, so its Hessian is the
constant ``n * inv(cov)``; this makes it the exact test case for the Hessian
estimators and the degenerate case of the covariance study.
"""
from __future__ import annotations

import numpy as np

from ..numerics import as_generator, as_symmat, sym_inverse
from .base import Model, per_obs_theta


class GaussianMeanModel(Model):
    name = "gaussian_mean"

    def __init__(self, cov=None, dim=None):
        if cov is None:
            cov = np.eye(1 if dim is None else int(dim))
        self.cov = as_symmat(np.atleast_2d(cov))
        self.prec = sym_inverse(self.cov)
        self._chol = np.linalg.cholesky(self.cov)
        self.p = self.cov.shape[0]
        self.param_names = tuple(f"mu{j + 1}" for j in range(self.p))

    def _resid(self, theta, data):
        x = np.asarray(data, dtype=float).reshape(-1, self.p)
        return x - per_obs_theta(theta, len(x))

    def obs_nll(self, theta, data):
        r = self._resid(theta, data)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return 0.5 * (np.einsum("ni,ij,nj->n", r, self.prec, r) + logdet + self.p * np.log(2.0 * np.pi))

    def obs_grad(self, theta, data):
        return -self._resid(theta, data) @ self.prec

    def obs_hess(self, theta, data):
        n = len(np.asarray(data).reshape(-1, self.p))
        return np.broadcast_to(self.prec, (n, self.p, self.p)).copy()

    def expected_fim(self, theta, n=1, rng=None):
        return n * self.prec

    def sample(self, theta, n, rng):
        z = as_generator(rng).standard_normal((n, self.p))
        return np.asarray(theta, dtype=float) + z @ self._chol.T

    def nobs(self, data):
        return len(np.asarray(data).reshape(-1, self.p))

    def default_init(self, data):
        return np.asarray(data, dtype=float).reshape(-1, self.p).mean(axis=0)

    def to_config(self):
        return {"model": self.name, "cov": self.cov.tolist()}

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.get("cov"))
