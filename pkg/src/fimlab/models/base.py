"""Shared model contract.

Independent-data models implement per-observation terms (``obs_nll``,
``obs_grad``, ``obs_hess``); the full-sample quantities are their sums.
Per-observation methods accept either one parameter vector of shape ``(p,)``
or one vector per observation, shape ``(n, p)``, which is what the
independent-perturbation FIM estimator needs.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import NotIndependentData
from ..numerics import symmetrize


class Model:
    """Base class for the statistical models.

    Attributes:
        p: parameter dimension.
        independent: observations are mutually independent, so the
            log-likelihood splits into per-observation terms.
        identical: observations are also identically distributed.
        fim_kind: how ``expected_fim`` is computed ("analytic",
            "quadrature" or "monte_carlo").
        name: registry key used in configs.
    """

    p: int = 0
    independent = True
    identical = True
    fim_kind = "analytic"
    name = "model"
    param_names: tuple = ()

    # -- per-observation terms (independent models only) -------------------
    def obs_nll(self, theta, data):
        raise NotIndependentData(f"{self.name} has no per-observation decomposition")

    def obs_grad(self, theta, data):
        raise NotIndependentData(f"{self.name} has no per-observation decomposition")

    def obs_hess(self, theta, data):
        raise NotIndependentData(f"{self.name} has no per-observation decomposition")

    # -- full-sample quantities --------------------------------------------
    def neg_log_lik(self, theta, data):
        return float(np.sum(self.obs_nll(theta, data)))

    def grad(self, theta, data):
        return np.sum(self.obs_grad(theta, data), axis=0)

    def hessian(self, theta, data):
        return symmetrize(np.sum(self.obs_hess(theta, data), axis=0))

    def expected_fim(self, theta, n, rng=None):
        """F_n(theta), the information in ``n`` observations."""
        raise NotImplementedError

    def sample(self, theta, n, rng):
        raise NotImplementedError

    def nobs(self, data):
        return len(data)

    # -- parameter handling ------------------------------------------------
    def lower_bounds(self):
        return np.full(self.p, -np.inf)

    def upper_bounds(self):
        return np.full(self.p, np.inf)

    def project(self, theta):
        return np.clip(np.asarray(theta, dtype=float), self.lower_bounds(), self.upper_bounds())

    def canonical(self, theta):
        """Resolve label ambiguity; identity unless the model overrides it."""
        return np.asarray(theta, dtype=float)

    def default_init(self, data):
        raise NotImplementedError

    def to_config(self):
        return {"model": self.name}

    def __repr__(self):
        return f"{type(self).__name__}({self.to_config()})"


def per_obs_theta(theta, n):
    """Broadcast ``theta`` to shape ``(n, p)`` and return its columns."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = np.broadcast_to(theta, (n, theta.size))
    return theta
