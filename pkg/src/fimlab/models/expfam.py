"""One-parameter exponential families ``h(x) exp(eta(t) T(x) - A(t))``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from ..numerics import as_generator
from .base import Model


@dataclass(frozen=True)
class _Family:
    log_h: Callable
    T: Callable
    eta: Callable
    d_eta: Callable
    d2_eta: Callable
    A: Callable
    d_A: Callable
    d2_A: Callable
    d3_eta: Callable
    d3_A: Callable
    expected_T: Callable
    var_T: Callable
    draw: Callable
    lower: float


def _poisson():
    return _Family(
        log_h=lambda x: -special.gammaln(x + 1.0),
        T=lambda x: x,
        eta=np.log,
        d_eta=lambda t: 1.0 / t,
        d2_eta=lambda t: -1.0 / t**2,
        A=lambda t: t,
        d_A=lambda t: np.ones_like(t),
        d2_A=lambda t: np.zeros_like(t),
        d3_eta=lambda t: 2.0 / t**3,
        d3_A=lambda t: np.zeros_like(t),
        expected_T=lambda t: t,
        var_T=lambda t: t,
        draw=lambda gen, t, n: gen.poisson(t, n).astype(float),
        lower=1e-8,
    )


def _exponential():
    return _Family(
        log_h=lambda x: np.zeros_like(x),
        T=lambda x: x,
        eta=lambda t: -t,
        d_eta=lambda t: -np.ones_like(t),
        d2_eta=lambda t: np.zeros_like(t),
        A=lambda t: -np.log(t),
        d_A=lambda t: -1.0 / t,
        d2_A=lambda t: 1.0 / t**2,
        d3_eta=lambda t: np.zeros_like(t),
        d3_A=lambda t: -2.0 / t**3,
        expected_T=lambda t: 1.0 / t,
        var_T=lambda t: 1.0 / t**2,
        draw=lambda gen, t, n: gen.exponential(1.0 / t, n),
        lower=1e-8,
    )


def _gaussian(var):
    return _Family(
        log_h=lambda x: -0.5 * x * x / var - 0.5 * np.log(2.0 * np.pi * var),
        T=lambda x: x,
        eta=lambda t: t / var,
        d_eta=lambda t: np.full_like(t, 1.0 / var),
        d2_eta=lambda t: np.zeros_like(t),
        A=lambda t: 0.5 * t * t / var,
        d_A=lambda t: t / var,
        d2_A=lambda t: np.full_like(t, 1.0 / var),
        d3_eta=lambda t: np.zeros_like(t),
        d3_A=lambda t: np.zeros_like(t),
        expected_T=lambda t: t,
        var_T=lambda t: np.full_like(t, var),
        draw=lambda gen, t, n: t + np.sqrt(var) * gen.standard_normal(n),
        lower=-np.inf,
    )


class ExpFamilyModel(Model):
    """Named one-parameter exponential family with iid observations.

    Args:
        family: "poisson", "exponential" or "gaussian_known_var".
        var: known variance for the Gaussian family.
    """

    name = "expfam"
    p = 1

    def __init__(self, family="poisson", var=1.0):
        builders = {
            "poisson": _poisson,
            "exponential": _exponential,
            "gaussian_known_var": lambda: _gaussian(float(var)),
        }
        if family not in builders:
            raise ValueError(f"unknown family {family!r}")
        if family == "gaussian_known_var" and not var > 0:
            raise ValueError("variance must be positive")
        self.family = family
        self.var = float(var)
        self._f = builders[family]()
        self.param_names = ("theta",)

    def __reduce__(self):
        return (type(self), (self.family, self.var))

    def _t(self, theta, data):
        t = np.asarray(theta, dtype=float)
        return t[..., 0] if t.ndim == 2 else t.reshape(-1)[0]

    def log_density(self, theta, x):
        t = self._t(theta, x)
        x = np.asarray(x, dtype=float)
        f = self._f
        return f.log_h(x) + f.eta(t) * f.T(x) - f.A(t)

    def obs_nll(self, theta, data):
        return -self.log_density(theta, data)

    def obs_grad(self, theta, data):
        t = self._t(theta, data)
        x = np.asarray(data, dtype=float)
        g = -self._f.d_eta(t) * self._f.T(x) + self._f.d_A(t)
        return np.reshape(g, (-1, 1)) * np.ones((x.size, 1))

    def obs_hess(self, theta, data):
        t = self._t(theta, data)
        x = np.asarray(data, dtype=float)
        h = -self._f.d2_eta(t) * self._f.T(x) + self._f.d2_A(t)
        return np.reshape(h, (-1, 1, 1)) * np.ones((x.size, 1, 1))

    def expected_T(self, theta):
        return float(self._f.expected_T(float(np.ravel(theta)[0])))

    def d2_eta(self, theta):
        return float(self._f.d2_eta(np.asarray(float(np.ravel(theta)[0]))))

    def expected_fim(self, theta, n=1, rng=None):
        t = np.asarray(float(np.ravel(theta)[0]))
        per_obs = -self._f.d2_eta(t) * self._f.expected_T(t) + self._f.d2_A(t)
        return np.array([[n * float(per_obs)]])

    def exact_cumulants(self, theta):
        """Closed-form per-observation cumulants ``(k_rs, k_rst, k_r_s, k_rs_t)``.

        With U_1 = -eta' T + A' and U_11 = -eta'' T + A'', the covariances
        reduce to multiples of var(T).
        """
        t = np.asarray(float(np.ravel(theta)[0]))
        f = self._f
        et, vt = f.expected_T(t), f.var_T(t)
        k_rs = -f.d2_eta(t) * et + f.d2_A(t)
        k_rst = -f.d3_eta(t) * et + f.d3_A(t)
        k_r_s = f.d_eta(t) ** 2 * vt
        k_rs_t = f.d2_eta(t) * f.d_eta(t) * vt
        return tuple(np.full((1,) * k, float(v)) for k, v in ((2, k_rs), (3, k_rst), (2, k_r_s), (3, k_rs_t)))

    def sample(self, theta, n, rng):
        return self._f.draw(as_generator(rng), float(np.ravel(theta)[0]), n)

    def lower_bounds(self):
        return np.array([self._f.lower])

    def default_init(self, data):
        x = np.asarray(data, dtype=float)
        if self.family == "exponential":
            return np.array([1.0 / max(x.mean(), 1e-8)])
        return np.array([max(x.mean(), self._f.lower)])

    def to_config(self):
        cfg = {"model": self.name, "family": self.family}
        if self.family == "gaussian_known_var":
            cfg["var"] = self.var
        return cfg

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.get("family", "poisson"), cfg.get("var", 1.0))


def expfam_lemma6_gap(model: ExpFamilyModel, data, theta_hat) -> float:
    """``eta''(t) * (E[T(X)] at t - mean T(x_i))`` evaluated at ``theta_hat``.

    The observed and expected information per observation differ by exactly
    this amount, so it is zero precisely when the two coincide.
    """
    t = float(np.ravel(theta_hat)[0])
    x = np.asarray(data, dtype=float)
    mean_T = float(np.mean(model._f.T(x)))
    return model.d2_eta(t) * (model.expected_T(t) - mean_T)
