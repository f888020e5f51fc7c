"""Two-component univariate Gaussian mixture.

Two parameterizations share one implementation: ``MixtureGaussianModel.ch3``
estimates ``[lam, mu1, mu2]`` with both scales fixed, and
``MixtureGaussianModel.five_param`` estimates ``[lam, mu1, sigma1, mu2,
sigma2]``. Derivatives are formed in the full five-parameter space and the
free coordinates are selected afterwards.
"""
from __future__ import annotations

import numpy as np

from ..exceptions import DegenerateMixture
from ..numerics import as_generator, symmetrize
from .base import Model

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
LAMBDA_FLOOR = 1e-8
SCALE_FLOOR = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _log_phi(x, mu, sig):
    z = (x - mu) / sig
    return -0.5 * z * z - np.log(sig) - HALF_LOG_2PI


def _log_density_derivs(x, lam, m1, s1, m2, s2, order=2):
    """log f with its gradient and Hessian in (lam, mu1, s1, mu2, s2).

    Returns ``(logf, g, h)`` with shapes ``(n,)``, ``(n, 5)``, ``(n, 5, 5)``;
    ``g``/``h`` are None when ``order`` is lower.
    """
    lp1 = _log_phi(x, m1, s1)
    lp2 = _log_phi(x, m2, s2)
    with np.errstate(divide="ignore"):
        logf = np.logaddexp(np.log(lam) + lp1, np.log1p(-lam) + lp2)
    if not np.all(np.isfinite(logf)):
        raise DegenerateMixture("mixture density underflowed at some observation")
    if order == 0:
        return logf, None, None
    q1 = np.exp(lp1 - logf)
    q2 = np.exp(lp2 - logf)
    r1 = lam * q1
    r2 = (1.0 - lam) * q2
    d1 = x - m1
    d2 = x - m2
    sm1 = d1 / s1**2
    sm2 = d2 / s2**2
    ss1 = (d1 * d1 / s1**2 - 1.0) / s1
    ss2 = (d2 * d2 / s2**2 - 1.0) / s2
    n = np.shape(logf)[0]
    g = np.empty((n, 5))
    g[:, 0] = q1 - q2
    g[:, 1] = r1 * sm1
    g[:, 2] = r1 * ss1
    g[:, 3] = r2 * sm2
    g[:, 4] = r2 * ss2
    if order == 1:
        return logf, g, None
    # second derivatives of f, divided by f
    hf = np.zeros((n, 5, 5))
    hf[:, 0, 1] = q1 * sm1
    hf[:, 0, 2] = q1 * ss1
    hf[:, 0, 3] = -q2 * sm2
    hf[:, 0, 4] = -q2 * ss2
    hf[:, 1, 1] = r1 * (sm1 * sm1 - 1.0 / s1**2)
    hf[:, 1, 2] = r1 * (sm1 * ss1 - 2.0 * d1 / s1**3)
    hf[:, 2, 2] = r1 * (ss1 * ss1 - 3.0 * d1 * d1 / s1**4 + 1.0 / s1**2)
    hf[:, 3, 3] = r2 * (sm2 * sm2 - 1.0 / s2**2)
    hf[:, 3, 4] = r2 * (sm2 * ss2 - 2.0 * d2 / s2**3)
    hf[:, 4, 4] = r2 * (ss2 * ss2 - 3.0 * d2 * d2 / s2**4 + 1.0 / s2**2)
    iu = np.triu_indices(5, 1)
    hf[:, iu[1], iu[0]] = hf[:, iu[0], iu[1]]
    h = hf - g[:, :, None] * g[:, None, :]
    return logf, g, h


class MixtureGaussianModel(Model):
    """Mixture ``lam N(mu1, sigma1^2) + (1 - lam) N(mu2, sigma2^2)``.

    Args:
        free: which of the five full parameters are estimated.
        fixed: values of the full parameter vector used for the fixed slots.
    """

    name = "mixture"
    fim_kind = "quadrature"
    _FULL_NAMES = ("lambda", "mu1", "sigma1", "mu2", "sigma2")

    def __init__(self, free=(0, 1, 2, 3, 4), fixed=(0.5, 0.0, 1.0, 0.0, 1.0)):
        self.free = tuple(int(i) for i in free)
        self.fixed = np.asarray(fixed, dtype=float)
        if self.fixed.shape != (5,):
            raise ValueError("fixed must have five entries")
        if self.fixed[2] <= 0 or self.fixed[4] <= 0:
            raise ValueError("mixture scales must be positive")
        self.p = len(self.free)
        self.param_names = tuple(self._FULL_NAMES[i] for i in self.free)

    @classmethod
    def ch3(cls, sigma1=1.0, sigma2=1.0):
        """Three-parameter form ``[lam, mu1, mu2]`` with known scales."""
        return cls(free=(0, 1, 3), fixed=(0.5, 0.0, sigma1, 0.0, sigma2))

    @classmethod
    def five_param(cls):
        """Five-parameter form ``[lam, mu1, sigma1, mu2, sigma2]``."""
        return cls()

    @property
    def variant(self):
        return "five_param" if self.p == 5 else "ch3"

    def full(self, theta):
        """Expand to the five full parameters (each scalar or per-observation)."""
        theta = np.asarray(theta, dtype=float)
        cols = [self.fixed[j] for j in range(5)]
        for k, j in enumerate(self.free):
            cols[j] = theta[..., k]
        return cols

    def _derivs(self, theta, x, order):
        x = np.asarray(x, dtype=float).ravel()
        if np.ndim(theta) == 2 and np.shape(theta)[0] != x.size:
            raise ValueError("per-observation theta must have one row per observation")
        lam, m1, s1, m2, s2 = self.full(theta)
        if np.any(np.asarray(lam) <= 0) or np.any(np.asarray(lam) >= 1):
            raise ValueError("mixing weight must lie in (0, 1)")
        if np.any(np.asarray(s1) <= 0) or np.any(np.asarray(s2) <= 0):
            raise ValueError("mixture scales must be positive")
        return _log_density_derivs(x, lam, m1, s1, m2, s2, order)

    def density(self, theta, x):
        logf, _, _ = self._derivs(theta, x, 0)
        return np.exp(logf)

    def obs_nll(self, theta, data):
        return -self._derivs(theta, data, 0)[0]

    def obs_grad(self, theta, data):
        _, g, _ = self._derivs(theta, data, 1)
        return -g[:, self.free]

    def obs_hess(self, theta, data):
        _, _, h = self._derivs(theta, data, 2)
        idx = np.asarray(self.free)
        return -h[:, idx[:, None], idx[None, :]]

    def _quadrature_grid(self, theta):
        lam, m1, s1, m2, s2 = (float(v) for v in self.full(theta))
        lo = min(m1 - 10.0 * s1, m2 - 10.0 * s2)
        hi = max(m1 + 10.0 * s1, m2 + 10.0 * s2)
        width = 0.5 * min(s1, s2)
        panels = int(min(4000, max(16, np.ceil((hi - lo) / width))))
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        return x, w

    def expected_fim(self, theta, n=1, rng=None, method="score"):
        """Information in ``n`` observations by composite Gauss-Legendre quadrature.

        ``method="score"`` integrates the score outer product (PSD by
        construction); ``method="hessian"`` integrates the Hessian. Both are
        the same matrix under regularity and serve as cross-checks.
        """
        x, w = self._quadrature_grid(theta)
        weight = w * self.density(theta, x)
        if method == "score":
            g = self.obs_grad(theta, x)
            per_obs = np.einsum("k,ki,kj->ij", weight, g, g)
        elif method == "hessian":
            per_obs = np.einsum("k,kij->ij", weight, self.obs_hess(theta, x))
        else:
            raise ValueError(f"unknown method {method!r}")
        return n * symmetrize(per_obs)

    def expected_fim_mc(self, theta, n, rng, reps=1000):
        """Monte Carlo average of Hessians over fresh samples, with standard errors."""
        gen = as_generator(rng)
        draws = np.empty((reps, self.p, self.p))
        for r in range(reps):
            draws[r] = self.hessian(theta, self.sample(theta, n, gen))
        return symmetrize(draws.mean(axis=0)), draws.std(axis=0, ddof=1) / np.sqrt(reps)

    def sample(self, theta, n, rng):
        gen = as_generator(rng)
        lam, m1, s1, m2, s2 = (float(v) for v in self.full(theta))
        first = gen.random(n) < lam
        z = gen.standard_normal(n)
        return np.where(first, m1 + s1 * z, m2 + s2 * z)

    def lower_bounds(self):
        lo = np.array([LAMBDA_FLOOR, -np.inf, SCALE_FLOOR, -np.inf, SCALE_FLOOR])
        return lo[list(self.free)]

    def upper_bounds(self):
        hi = np.array([1.0 - LAMBDA_FLOOR, np.inf, np.inf, np.inf, np.inf])
        return hi[list(self.free)]

    def _swappable(self):
        if self.p == 5:
            return True
        return 2 not in self.free and self.fixed[2] == self.fixed[4]

    def canonical(self, theta):
        """Order components so that ``mu1 <= mu2``."""
        theta = np.array(theta, dtype=float)
        if not self._swappable():
            return theta
        pos = {j: k for k, j in enumerate(self.free)}
        if theta[pos[1]] > theta[pos[3]]:
            theta[pos[0]] = 1.0 - theta[pos[0]]
            theta[pos[1]], theta[pos[3]] = theta[pos[3]], theta[pos[1]]
            if self.p == 5:
                theta[pos[2]], theta[pos[4]] = theta[pos[4]], theta[pos[2]]
        return theta

    def default_init(self, data):
        """lam = 0.5, means at the sample quartiles, scales at half the spread."""
        x = np.asarray(data, dtype=float)
        q25, q75 = np.percentile(x, [25.0, 75.0])
        if q25 == q75:
            q75 = q25 + 1.0
        spread = max(0.5 * float(np.std(x)), 1e-3)
        full = np.array([0.5, q25, spread, q75, spread])
        return full[list(self.free)]

    def to_config(self):
        cfg = {"model": self.name, "variant": self.variant}
        if self.variant == "ch3":
            cfg["sigma1"] = float(self.fixed[2])
            cfg["sigma2"] = float(self.fixed[4])
        return cfg

    @classmethod
    def from_config(cls, cfg):
        if cfg.get("variant", "ch3") == "ch3":
            return cls.ch3(float(cfg.get("sigma1", 1.0)), float(cfg.get("sigma2", 1.0)))
        return cls.five_param()
