"""Linear Gaussian state-space model with unknown diagonal process noise.

    x_t = A x_{t-1} + w_t,   w_t ~ N(0, diag(theta))
    y_t = C x_t + v_t,       v_t ~ N(0, R)

Scalar observations only. The likelihood is evaluated by the Kalman filter
in innovations form; derivatives come from sensitivity recursions run in the
compiled kernel (see ``fimlab.kernels``), with finite differences over the
exact filter likelihood as the reference path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..exceptions import SingularInnovation
from ..numerics import as_generator, fd_hessian, symmetrize
from .base import Model

SCALE_FLOOR = 1e-8

STUDY_A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.8, 0.8, -0.8]])
STUDY_C = np.array([1.0, 0.0, 0.0])


@dataclass
class KalmanRun:
    innovations: np.ndarray
    innovation_vars: np.ndarray
    filtered_means: np.ndarray
    filtered_covs: np.ndarray


class LinearStateSpaceModel(Model):
    """State-space model whose parameter is the diagonal of Q.

    Args:
        A: ``l x l`` transition matrix.
        C: length-``l`` observation row.
        R: observation noise variance (> 0).
        mu0, Sigma0: initial state mean and (PSD) covariance.
    """

    name = "statespace"
    independent = False
    identical = False
    fim_kind = "monte_carlo"

    def __init__(self, A=STUDY_A, C=STUDY_C, R=1.0, mu0=None, Sigma0=None, fim_reps=200):
        self.A = np.array(A, dtype=float)
        self.l = self.A.shape[0]
        if self.A.shape != (self.l, self.l):
            raise ValueError("A must be square")
        self.C = np.array(C, dtype=float).ravel()
        if self.C.size != self.l:
            raise ValueError("C must have one entry per state")
        self.R = float(R)
        if not self.R > 0:
            raise ValueError("R must be positive")
        self.mu0 = np.zeros(self.l) if mu0 is None else np.array(mu0, dtype=float)
        self.Sigma0 = np.zeros((self.l, self.l)) if Sigma0 is None else symmetrize(Sigma0)
        vals, vecs = np.linalg.eigh(self.Sigma0)
        if vals.min() < -1e-12:
            raise ValueError("Sigma0 must be positive semidefinite")
        self._sigma0_root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        self.p = self.l
        self.fim_reps = int(fim_reps)
        self.param_names = tuple(f"Q{j + 1}{j + 1}" for j in range(self.l))

    @classmethod
    def default_study(cls, fim_reps=200):
        return cls(fim_reps=fim_reps)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise ValueError(f"expected {self.p} parameters, got shape {theta.shape}")
        return theta

    def kalman_filter(self, theta, y):
        """Run the filter and keep every intermediate quantity."""
        q = self._check(theta)
        y = np.asarray(y, dtype=float).ravel()
        A, C, Q = self.A, self.C, np.diag(q)
        n = y.size
        eps = np.empty(n)
        svar = np.empty(n)
        means = np.empty((n, self.l))
        covs = np.empty((n, self.l, self.l))
        xf, pf = self.mu0.copy(), self.Sigma0.copy()
        for t in range(n):
            xp = A @ xf
            pp = A @ pf @ A.T + Q
            s = C @ pp @ C + self.R
            if not s > 0:
                raise SingularInnovation(f"innovation variance {s} at t={t + 1}")
            gain = pp @ C / s
            eps[t] = y[t] - C @ xp
            svar[t] = s
            xf = xp + gain * eps[t]
            pf = pp - np.outer(gain, C @ pp)
            means[t], covs[t] = xf, pf
        return KalmanRun(eps, svar, means, covs)

    def neg_log_lik(self, theta, data):
        """0.5 * sum(log S_t + eps_t**2 / S_t); constants dropped."""
        q = self._check(theta)
        val = kernels.ss_nll(self.A, self.C, self.R, q, self.mu0, self.Sigma0, data)
        if not np.isfinite(val):
            raise SingularInnovation("innovation variance not positive")
        return float(val)

    def derivs(self, theta, data):
        """``(nll, grad, hess)`` from the sensitivity recursions."""
        q = self._check(theta)
        val, g, h = kernels.ss_nll_derivs(self.A, self.C, self.R, q, self.mu0, self.Sigma0, data)
        if not np.isfinite(val):
            raise SingularInnovation("innovation variance not positive")
        return float(val), g, h

    def grad(self, theta, data):
        return self.derivs(theta, data)[1]

    def hessian(self, theta, data, method="analytic"):
        if method == "analytic":
            return symmetrize(self.derivs(theta, data)[2])
        if method == "fd":
            return fd_hessian(lambda t: self._probe_nll(t, data), self._check(theta))
        raise ValueError(f"unknown method {method!r}")

    def _probe_nll(self, theta, data):
        if np.any(theta < 0):
            return np.nan
        try:
            return self.neg_log_lik(theta, data)
        except SingularInnovation:
            return np.nan

    def expected_fim(self, theta, n, rng=None, reps=None):
        """Average analytic Hessian over ``reps`` series simulated at ``theta``."""
        if rng is None:
            raise ValueError("Monte Carlo information needs a random stream")
        mean, _ = self.expected_fim_with_se(theta, n, rng, reps)
        return mean

    def expected_fim_with_se(self, theta, n, rng, reps=None):
        reps = self.fim_reps if reps is None else int(reps)
        if reps < 1:
            raise ValueError("reps must be >= 1")
        gen = as_generator(rng)
        q = self._check(theta)
        draws = np.empty((reps, self.p, self.p))
        for r in range(reps):
            draws[r] = self.derivs(q, self.sample(q, n, gen))[2]
        mean = symmetrize(draws.mean(axis=0))
        se = draws.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.full_like(mean, np.nan)
        return mean, se

    def sample(self, theta, n, rng):
        gen = as_generator(rng)
        q = np.sqrt(np.clip(self._check(theta), 0.0, None))
        x = self.mu0 + self._sigma0_root @ gen.standard_normal(self.l)
        w = gen.standard_normal((n, self.l)) * q
        v = gen.standard_normal(n) * np.sqrt(self.R)
        y = np.empty(n)
        for t in range(n):
            x = self.A @ x + w[t]
            y[t] = self.C @ x + v[t]
        return y

    def lower_bounds(self):
        return np.full(self.p, SCALE_FLOOR)

    def default_init(self, data):
        return np.ones(self.p)

    def to_config(self):
        return {
            "model": self.name,
            "A": self.A.tolist(),
            "C": self.C.tolist(),
            "R": self.R,
            "mu0": self.mu0.tolist(),
            "Sigma0": self.Sigma0.tolist(),
            "fim_reps": self.fim_reps,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(
            A=cfg.get("A", STUDY_A),
            C=cfg.get("C", STUDY_C),
            R=cfg.get("R", 1.0),
            mu0=cfg.get("mu0"),
            Sigma0=cfg.get("Sigma0"),
            fim_reps=cfg.get("fim_reps", 200),
        )
