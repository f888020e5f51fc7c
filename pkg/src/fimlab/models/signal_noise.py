"""Multivariate signal-plus-noise model with heteroscedastic known noise.

Observation ``i`` (1-based) is ``N(mu, diag(s) + sqrt(i) * UtU)``; the
parameter is ``[mu_1..mu_q, s_1..s_q]``.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import NotPositiveDefinite
from ..numerics import as_generator, as_symmat, symmetrize
from .base import Model

SCALE_FLOOR = 1e-8
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

DEFAULT_UTU = np.array(
    [
        [0.0289, 0.0219, 0.0120, 0.0216],
        [0.0219, 0.0200, 0.0068, 0.0189],
        [0.0120, 0.0068, 0.0076, 0.0053],
        [0.0216, 0.0189, 0.0053, 0.0210],
    ]
)


class SignalPlusNoiseModel(Model):
    """Signal-plus-noise model with diagonal signal covariance.

    Args:
        utu: PSD matrix scaling the known noise covariances; defaults to the
            built-in 4x4 matrix, or its leading ``q x q`` block if ``q`` is
            given.
        q: observation dimension (only used with the built-in matrix).
    """

    name = "signal_noise"
    identical = False

    def __init__(self, utu=None, q=None):
        if utu is None:
            q = 4 if q is None else int(q)
            if not 1 <= q <= 4:
                raise ValueError("built-in noise matrix supports q in 1..4")
            utu = DEFAULT_UTU[:q, :q]
        # The built-in matrix is rounded to four decimals and is very slightly
        # indefinite, so only Sigma + Q_i is required to be positive definite.
        self.utu = as_symmat(utu)
        self.q = self.utu.shape[0]
        self.p = 2 * self.q
        self.param_names = tuple(f"mu{j + 1}" for j in range(self.q)) + tuple(
            f"Sigma{j + 1}{j + 1}" for j in range(self.q)
        )

    def noise_cov(self, n):
        """Stack of known noise covariances ``sqrt(i) * UtU`` for i = 1..n."""
        scale = np.sqrt(np.arange(1, n + 1, dtype=float))
        return scale[:, None, None] * self.utu[None]

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta[..., : self.q], theta[..., self.q :]

    def total_cov(self, theta, n):
        """``Sigma + Q_i`` for i = 1..n and its Cholesky factors."""
        _, sig = self.split(theta)
        v = self.noise_cov(n).copy()
        diag = np.arange(self.q)
        v[:, diag, diag] += sig if np.ndim(sig) == 2 else sig[None, :]
        try:
            chol = np.linalg.cholesky(v)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("Sigma + Q_i is not positive definite") from None
        return v, chol

    def _moments(self, theta, n):
        """Per-observation precision matrices and log-determinants."""
        v, chol = self.total_cov(theta, n)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        eye = np.broadcast_to(np.eye(self.q), v.shape)
        w = np.linalg.solve(v, eye)
        return symmetrize_stack(w), logdet

    def _resid(self, theta, x):
        mu, _ = self.split(theta)
        return np.asarray(x, dtype=float) - mu

    def obs_nll(self, theta, data):
        x = np.asarray(data, dtype=float)
        w, logdet = self._moments(theta, len(x))
        r = self._resid(theta, x)
        quad = np.einsum("ni,nij,nj->n", r, w, r)
        return 0.5 * (2.0 * self.q * HALF_LOG_2PI + logdet + quad)

    def obs_grad(self, theta, data):
        x = np.asarray(data, dtype=float)
        w, _ = self._moments(theta, len(x))
        wr = np.einsum("nij,nj->ni", w, self._resid(theta, x))
        diag = np.diagonal(w, axis1=1, axis2=2)
        return np.concatenate([-wr, 0.5 * (diag - wr * wr)], axis=1)

    def obs_hess(self, theta, data):
        x = np.asarray(data, dtype=float)
        n, q = len(x), self.q
        w, _ = self._moments(theta, n)
        wr = np.einsum("nij,nj->ni", w, self._resid(theta, x))
        h = np.empty((n, 2 * q, 2 * q))
        h[:, :q, :q] = w
        cross = w * wr[:, None, :]
        h[:, :q, q:] = cross
        h[:, q:, :q] = np.transpose(cross, (0, 2, 1))
        h[:, q:, q:] = 0.5 * (-w * w + 2.0 * wr[:, :, None] * w * wr[:, None, :])
        return h

    def obs_fim(self, theta, n):
        """Per-observation expected information, shape ``(n, p, p)``."""
        q = self.q
        w, _ = self._moments(theta, n)
        out = np.zeros((n, 2 * q, 2 * q))
        out[:, :q, :q] = w
        out[:, q:, q:] = 0.5 * w * w
        return out

    def expected_fim(self, theta, n=1, rng=None):
        """Closed-form information: mean block sum(W_i), variance block sum(W_i**2)/2."""
        return symmetrize(self.obs_fim(theta, n).sum(axis=0))

    def sample(self, theta, n, rng):
        """Draw x_i ~ N(mu, Sigma + Q_i) through the Cholesky factor of the sum."""
        gen = as_generator(rng)
        mu, _ = self.split(theta)
        _, chol = self.total_cov(theta, n)
        z = gen.standard_normal((n, self.q))
        return mu + np.einsum("nij,nj->ni", chol, z)

    def lower_bounds(self):
        return np.concatenate([np.full(self.q, -np.inf), np.full(self.q, SCALE_FLOOR)])

    def default_init(self, data):
        """Sample mean, and sample variance less the average known noise variance."""
        x = np.asarray(data, dtype=float)
        mu = x.mean(axis=0)
        noise = np.diagonal(self.noise_cov(len(x)), axis1=1, axis2=2).mean(axis=0)
        var = x.var(axis=0) - noise if len(x) > 1 else np.ones(self.q)
        return np.concatenate([mu, np.maximum(var, 1e-2)])

    def to_config(self):
        return {"model": self.name, "utu": self.utu.tolist()}

    @classmethod
    def from_config(cls, cfg):
        if "utu" in cfg:
            return cls(utu=cfg["utu"])
        return cls(q=cfg.get("q"))


def symmetrize_stack(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))
