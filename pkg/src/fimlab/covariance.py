"""Covariance estimators for the MLE and the Monte Carlo comparison study.

The two estimators of ``n cov(theta_hat)`` compared here are the inverse of
the scaled expected information ``F_n(theta_hat) / n`` and the inverse of
the scaled observed information ``H_n(theta_hat) / n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np

from .exceptions import EmptyCandidates
from .harness import failure_counts, replicate
from .numerics import stream_for, sym_inverse, symmetrize
from .solvers import fit


class CovEstimatorKind(str, Enum):
    INVERSE_EXPECTED_FIM = "inverse_expected_fim"
    INVERSE_OBSERVED_FIM = "inverse_observed_fim"


def observed_fim(model, data, theta_hat):
    """``H_n(theta_hat) / n``."""
    return model.hessian(theta_hat, data) / model.nobs(data)


def expected_fim_scaled(model, theta_hat, n, rng=None, reps=None, return_se=False):
    """``F_n(theta_hat) / n``.

    Models with closed-form or quadrature information are evaluated
    directly (standard error zero); Monte Carlo models average Hessians over
    fresh data simulated at ``theta_hat`` and report standard errors.
    """
    if model.fim_kind == "monte_carlo":
        mean, se = model.expected_fim_with_se(theta_hat, n, rng, reps)
        mean, se = mean / n, se / n
    else:
        mean = model.expected_fim(theta_hat, n) / n
        se = np.zeros_like(mean)
    return (mean, se) if return_se else mean


def estimator(kind, model, data, theta_hat, rng=None):
    """Covariance estimate of the requested kind at ``theta_hat``."""
    kind = CovEstimatorKind(kind)
    if kind is CovEstimatorKind.INVERSE_OBSERVED_FIM:
        return sym_inverse(observed_fim(model, data, theta_hat))
    return sym_inverse(expected_fim_scaled(model, theta_hat, model.nobs(data), rng))


def _fit_one(index, model, theta_star, n, seed, tag):
    data = model.sample(theta_star, n, stream_for(seed, tag, "target", index, "data"))
    return fit(model, data, rng=stream_for(seed, tag, "target", index, "solve")).theta


def mc_cov_mle(model, theta_star, n, reps, seed=0, tag="mc_cov", threads=1, max_failure_rate=0.01):
    """``n`` times the sample covariance of ``reps`` independent MLEs.

    Returns ``(matrix, failures)``; failed fits are excluded and counted.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    fn = partial(_fit_one, model=model, theta_star=np.asarray(theta_star, float), n=n, seed=seed, tag=tag)
    thetas, failures = replicate(fn, reps, threads, max_failure_rate, "MLE fits")
    thetas = np.array(thetas)
    return n * symmetrize(np.atleast_2d(np.cov(thetas.T, ddof=1))), failures


def typical_outcome(candidates, target):
    """The candidate whose Frobenius distance to ``target`` is the median.

    Ties are broken by position, so the chosen distance (and, absent exact
    ties, the chosen matrix) does not depend on candidate order.
    """
    cands = np.asarray(candidates, dtype=float)
    if cands.size == 0 or len(cands) == 0:
        raise EmptyCandidates("no candidates")
    if len(cands) % 2 == 0:
        raise ValueError("typical_outcome needs an odd number of candidates")
    dist = np.sqrt(np.sum((cands - np.asarray(target, dtype=float)) ** 2, axis=(1, 2)))
    order = np.argsort(dist, kind="stable")
    return cands[order[(len(cands) - 1) // 2]]


def relative_rmse(mse, target):
    """``|sqrt(M) / target|`` with NaN marking entries where the target is zero."""
    target = np.asarray(target, dtype=float)
    out = np.full(target.shape, np.nan)
    nz = target != 0
    out[nz] = np.abs(np.sqrt(mse[nz]) / target[nz])
    return out


@dataclass
class DiscrepancyReport:
    """Output of ``discrepancy_study``; R entries are NaN where the target is 0."""

    target: np.ndarray
    M_H: np.ndarray
    M_F: np.ndarray
    R_H: np.ndarray
    R_F: np.ndarray
    typical_H: np.ndarray
    typical_F: np.ndarray
    reps_outer: int
    reps_target: int
    n: int
    theta_star: np.ndarray
    se_M_H: np.ndarray
    se_M_F: np.ndarray
    se_diff: np.ndarray
    used_outer: int
    failures_target: dict = field(default_factory=dict)
    failures_outer: dict = field(default_factory=dict)
    typical_count: int = 0

    @property
    def diff(self):
        return self.M_H - self.M_F

    def typical_sse(self):
        """Sum of squared entry errors of the two typical outcomes."""
        return (
            float(np.sum((self.typical_H - self.target) ** 2)),
            float(np.sum((self.typical_F - self.target) ** 2)),
        )


def _outer_one(index, model, theta_star, n, seed, tag, fim_reps):
    data = model.sample(theta_star, n, stream_for(seed, tag, "outer", index, "data"))
    theta_hat = fit(model, data, rng=stream_for(seed, tag, "outer", index, "solve")).theta
    h_inv = sym_inverse(observed_fim(model, data, theta_hat))
    f_bar = expected_fim_scaled(
        model, theta_hat, n, rng=stream_for(seed, tag, "outer", index, "fim"), reps=fim_reps
    )
    return h_inv, sym_inverse(f_bar)


def discrepancy_study(
    model,
    theta_star,
    n,
    reps_outer,
    reps_target,
    seed=0,
    tag="discrepancy",
    threads=1,
    max_failure_rate=0.01,
    fim_reps=None,
    typical_count=1001,
):
    """Compare both covariance estimators against the Monte Carlo target.

    The target ``n cov(theta_hat)`` uses ``reps_target`` fits. Each of
    ``reps_outer`` fresh datasets is fitted and both estimators formed; a
    replication where either estimator cannot be inverted is dropped from
    both (keeping the comparison paired) and counted. ``typical_count``
    candidates (reduced to the largest odd number available) feed the
    typical-outcome selection.
    """
    if reps_outer < 2 or reps_target < 2:
        raise ValueError("reps_outer and reps_target must be >= 2")
    theta_star = np.asarray(theta_star, dtype=float)
    target, fail_t = mc_cov_mle(
        model, theta_star, n, reps_target, seed, tag, threads, max_failure_rate
    )
    fn = partial(
        _outer_one, model=model, theta_star=theta_star, n=n, seed=seed, tag=tag, fim_reps=fim_reps
    )
    pairs, fail_o = replicate(fn, reps_outer, threads, max_failure_rate, "outer replications")
    h_inv = np.array([p[0] for p in pairs])
    f_inv = np.array([p[1] for p in pairs])
    used = len(pairs)
    err_h = (h_inv - target) ** 2
    err_f = (f_inv - target) ** 2
    m_h, m_f = err_h.mean(axis=0), err_f.mean(axis=0)
    root = np.sqrt(used)
    k = min(typical_count, used if used % 2 else used - 1)
    return DiscrepancyReport(
        target=target,
        M_H=m_h,
        M_F=m_f,
        R_H=relative_rmse(m_h, target),
        R_F=relative_rmse(m_f, target),
        typical_H=typical_outcome(h_inv[:k], target),
        typical_F=typical_outcome(f_inv[:k], target),
        reps_outer=reps_outer,
        reps_target=reps_target,
        n=n,
        theta_star=theta_star,
        se_M_H=err_h.std(axis=0, ddof=1) / root,
        se_M_F=err_f.std(axis=0, ddof=1) / root,
        se_diff=(err_h - err_f).std(axis=0, ddof=1) / root,
        used_outer=used,
        failures_target=failure_counts(fail_t),
        failures_outer=failure_counts(fail_o),
        typical_count=k,
    )
