"""SPSA with pluggable perturbation distributions and the one-iteration analysis.

The comparison harness runs replications in fixed-size blocks that are
vectorized over replications. Each block owns three streams (noise,
Bernoulli perturbations, segmented-uniform perturbations); both
distributions see the same measurement noise, which is the pairing used by
the matched-pairs test.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy import stats

from .exceptions import InvalidDistribution, NonFiniteEvaluation, ZeroPerturbationComponent
from .harness import parallel_map
from .numerics import as_generator, stream_for

SU_LOW = (19.0 - 3.0 * np.sqrt(13.0)) / 20.0
SU_HIGH = (19.0 + 3.0 * np.sqrt(13.0)) / 20.0
SU_INV_SECOND = 100.0 / 61.0
A_EXPONENT = 0.602
C_EXPONENT = 0.101
BLOCK = 1000


# -- perturbation distributions ------------------------------------------------


@dataclass(frozen=True)
class PerturbationDist:
    """Symmetric, bounded perturbation distribution with its moment record.

    ``sampler(gen, shape)`` draws iid components.
    """

    name: str
    sampler: Callable
    mean: float
    var: float
    inv_second: float
    bound: float

    def sample(self, gen, shape):
        return self.sampler(gen, shape)


def _bernoulli_sampler(gen, shape):
    return 2.0 * gen.integers(0, 2, size=shape) - 1.0


def _segmented_uniform_sampler(gen, shape):
    u = gen.random(shape)
    sign = 2.0 * gen.integers(0, 2, size=shape) - 1.0
    return sign * (SU_LOW + (SU_HIGH - SU_LOW) * u)


BERNOULLI = PerturbationDist("bernoulli_pm1", _bernoulli_sampler, 0.0, 1.0, 1.0, 1.0)
SEGMENTED_UNIFORM = PerturbationDist(
    "segmented_uniform", _segmented_uniform_sampler, 0.0, 1.0, SU_INV_SECOND, SU_HIGH
)


def custom_distribution(name, sampler, inv_second, bound, check_draws=100_000, seed=0, rtol=0.05):
    """Validate and wrap a user sampler.

    The declared ``E(1/Delta^2)`` must match a ``check_draws`` empirical
    estimate to ``rtol``; draws must stay within ``bound``, avoid zero and
    look symmetric (mean within 5 standard errors of zero).

    Raises:
        InvalidDistribution: any of the checks fails.
    """
    if not (np.isfinite(inv_second) and inv_second > 0 and np.isfinite(bound) and bound > 0):
        raise InvalidDistribution("inverse second moment and bound must be finite and positive")
    draws = np.asarray(sampler(np.random.default_rng(seed), (check_draws,)), dtype=float)
    if draws.shape != (check_draws,) or not np.all(np.isfinite(draws)):
        raise InvalidDistribution("sampler must return finite draws of the requested shape")
    if np.any(draws == 0):
        raise InvalidDistribution("sampler produced exact zeros")
    if np.max(np.abs(draws)) > bound:
        raise InvalidDistribution("draws exceed the declared bound")
    sd = draws.std()
    if abs(draws.mean()) > 5.0 * sd / np.sqrt(check_draws):
        raise InvalidDistribution("sample mean is not consistent with symmetry about zero")
    emp = np.mean(draws**-2)
    if abs(emp - inv_second) > rtol * inv_second:
        raise InvalidDistribution(f"declared E(1/D^2)={inv_second:.6g} but sample gives {emp:.6g}")
    return PerturbationDist(name, sampler, 0.0, float(sd**2), float(inv_second), float(bound))


DISTRIBUTIONS = {d.name: d for d in (BERNOULLI, SEGMENTED_UNIFORM)}


def get_distribution(dist):
    if isinstance(dist, PerturbationDist):
        return dist
    try:
        return DISTRIBUTIONS[dist]
    except KeyError:
        raise InvalidDistribution(f"unknown perturbation distribution {dist!r}") from None


def sample_perturbation(dist, p, rng):
    """``p`` iid components from ``dist``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return get_distribution(dist).sample(as_generator(rng), (p,))


# -- gradient estimate and iteration ------------------------------------------


@dataclass(frozen=True)
class GainSchedule:
    """``a_k = a / (k + 2)^0.602`` and ``c_k = c / (k + 1)^0.101``."""

    a: float
    c: float

    def __post_init__(self):
        if self.a < 0 or not self.c > 0:
            raise ValueError("need a >= 0 and c > 0")

    def a_k(self, k):
        return self.a / (k + 2.0) ** A_EXPONENT

    def c_k(self, k):
        return self.c / (k + 1.0) ** C_EXPONENT


def sp_gradient(y, theta, c_k, delta):
    """Two-evaluation simultaneous perturbation gradient estimate.

    Works on single points or on batches (leading axes of ``theta`` and
    ``delta``) as long as ``y`` does.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta == 0):
        raise ZeroPerturbationComponent("perturbation has a zero component")
    if not c_k > 0:
        raise ValueError("c_k must be positive")
    theta = np.asarray(theta, dtype=float)
    diff = np.asarray(y(theta + c_k * delta)) - np.asarray(y(theta - c_k * delta))
    return diff[..., None] / (2.0 * c_k * delta)


def spsa_run(y, theta0, gains: GainSchedule, dist, K, rng):
    """Run ``K`` SPSA iterations from ``theta0`` and return the last iterate.

    ``y`` is the noisy loss oracle; perturbations come from ``rng``.

    Raises:
        NonFiniteEvaluation: an iterate or oracle value became non-finite.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    dist = get_distribution(dist)
    gen = as_generator(rng)
    theta = np.array(theta0, dtype=float)
    for k in range(K):
        delta = dist.sample(gen, theta.shape)
        g = sp_gradient(y, theta, gains.c_k(k), delta)
        theta = theta - gains.a_k(k) * g
        if not np.all(np.isfinite(theta)):
            raise NonFiniteEvaluation(f"SPSA iterate became non-finite at k={k}")
    return theta


# -- loss functions -------------------------------------------------------------


class QuadraticLoss:
    """``L(t) = t' A t + b' t`` evaluated over the last axis."""

    def __init__(self, A, b=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        p = self.A.shape[0]
        self.b = np.zeros(p) if b is None else np.asarray(b, dtype=float)
        self.p = p

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.einsum("...i,ij,...j->...", t, self.A, t) + t @ self.b

    def grad(self, t):
        return np.asarray(t, dtype=float) @ (self.A + self.A.T).T + self.b

    def minimizer(self):
        return np.linalg.solve(self.A + self.A.T, -self.b)

    third_derivative_bound = 0.0


class QuarticCoupledLoss:
    """``L(t) = t1^4 + t1^2 + t1 t2 + t2^2`` with minimizer at the origin."""

    p = 2
    third_derivative_bound = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        t1, t2 = t[..., 0], t[..., 1]
        return t1**4 + t1**2 + t1 * t2 + t2**2

    def grad(self, t):
        t = np.asarray(t, dtype=float)
        t1, t2 = t[..., 0], t[..., 1]
        return np.stack([4 * t1**3 + 2 * t1 + t2, t1 + 2 * t2], axis=-1)

    def minimizer(self):
        return np.zeros(2)


def coupled_quadratic():
    """``t1^2 - t1 t2 + t2^2``."""
    return QuadraticLoss([[1.0, -0.5], [-0.5, 1.0]])


class NoisyOracle:
    """``y(t) = L(t) + sigma * eps`` with Gaussian noise drawn from ``rng``."""

    def __init__(self, loss, sigma2, rng):
        self.loss = loss
        self.sigma = float(np.sqrt(sigma2))
        self.gen = as_generator(rng)

    def __call__(self, t):
        val = np.asarray(self.loss(t), dtype=float)
        return val + self.sigma * self.gen.standard_normal(val.shape)


# -- one-iteration superiority condition ----------------------------------------


def theoremA1_lhs(L_grad, theta0, theta_star, sigma2, a0S, a0B, c0S, c0B, p=None):
    """Leading-order ``MSE_SU - MSE_B`` after one SPSA iteration.

    ``L_grad`` holds the loss gradient at ``theta0``. The expression is exact
    for quadratic losses; negative values favour the segmented uniform.
    """
    g = np.asarray(L_grad, dtype=float)
    p = g.size if p is None else p
    shift = np.asarray(theta0, dtype=float) - np.asarray(theta_star, dtype=float)
    sum_l2 = float(g @ g)
    first = ((100.0 * p - 39.0) / 61.0 * a0S**2 - p * a0B**2) * sum_l2
    second = (a0S - a0B) * (p * sigma2 / (2.0 * c0B**2) * (a0S + a0B) - 2.0 * float(shift @ g))
    third = -p * a0S**2 * sigma2 * (1.0 / (2.0 * c0B**2) - 50.0 / (61.0 * c0S**2))
    return first + second + third


def corollaryA1_bound(M, theta0, theta_star, a0S, a0B, c0S, c0B, p, max_L):
    """Upper bound on the higher-order remainder given ``|L_ijk| <= M``."""
    if M < 0:
        raise ValueError("M must be non-negative")
    dist = float(np.sum(np.abs(np.asarray(theta0, float) - np.asarray(theta_star, float))))
    return (
        (4.0 * a0S * c0S**2 + a0B * c0B**2) * M * dist * (p - 1) ** 2
        + a0S**2 * c0S**4 * M**2 * p**7 * a0S / 20.0
        + (a0S**2 * c0S**3 + a0B**2 * c0B**3) * M * p**5 * max_L / 3.0
    )


def superiority_condition(L_grad, theta0, theta_star, sigma2, a0S, a0B, c0S, c0B, M=0.0):
    """``(lhs + U, holds)``: the conservative SU-preferred test."""
    g = np.asarray(L_grad, dtype=float)
    lhs = theoremA1_lhs(g, theta0, theta_star, sigma2, a0S, a0B, c0S, c0B)
    u = corollaryA1_bound(M, theta0, theta_star, a0S, a0B, c0S, c0B, g.size, float(np.max(g)))
    return lhs + u, bool(lhs + u < 0)


# -- paired MSE comparison -------------------------------------------------------


@dataclass
class SpsaComparison:
    """Paired MSE comparison of segmented-uniform (SU) and Bernoulli runs.

    ``diff_mean`` is ``MSE_B - MSE_SU``. ``p_su_better`` tests the
    alternative ``MSE_SU < MSE_B`` and ``p_bernoulli_better`` the reverse;
    both are one-sided matched-pairs t-test p-values and are NaN when every
    paired difference is identical (``degenerate``).
    """

    mse_bernoulli: float
    mse_su: float
    diff_mean: float
    diff_se: float
    t_stat: float
    p_su_better: float
    p_bernoulli_better: float
    degenerate: bool
    reps: int
    K: int
    seed: int

    @property
    def p_value(self):
        return self.p_su_better


def _batched_run(loss, theta0, gains, dist, K, pert_gen, noise, sigma):
    theta = np.repeat(np.asarray(theta0, dtype=float)[None, :], noise.shape[1], axis=0)
    for k in range(K):
        delta = dist.sample(pert_gen, theta.shape)
        ck = gains.c_k(k)
        y_plus = loss(theta + ck * delta) + sigma * noise[k, :, 0]
        y_minus = loss(theta - ck * delta) + sigma * noise[k, :, 1]
        theta = theta - gains.a_k(k) * ((y_plus - y_minus)[:, None] / (2.0 * ck * delta))
    return theta


def _compare_block(block, loss, theta_star, theta0, sigma2, gains_S, gains_B, K, seed, tag):
    noise = stream_for(seed, tag, block, "noise").generator.standard_normal((K, BLOCK, 2))
    sigma = np.sqrt(sigma2)
    out = []
    for dist, gains, role in (
        (SEGMENTED_UNIFORM, gains_S, "perturb-su"),
        (BERNOULLI, gains_B, "perturb-bernoulli"),
    ):
        gen = stream_for(seed, tag, block, role).generator
        theta = _batched_run(loss, theta0, gains, dist, K, gen, noise, sigma)
        out.append(np.sum((theta - theta_star) ** 2, axis=1))
    return out[0], out[1]


def mse_compare(
    loss,
    theta_star,
    theta0,
    sigma2,
    gains_S: GainSchedule,
    gains_B: GainSchedule,
    K,
    reps,
    seed=0,
    tag="spsa",
    threads=1,
):
    """Paired Monte Carlo comparison of ``E||theta_K - theta*||^2``.

    Replication ``r`` lives in block ``r // 1000``; every block draws a full
    1000 replications so raising ``reps`` never changes earlier ones.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if K < 1:
        raise ValueError("K must be >= 1")
    theta_star = np.asarray(theta_star, dtype=float)
    fn = partial(
        _compare_block,
        loss=loss,
        theta_star=theta_star,
        theta0=np.asarray(theta0, dtype=float),
        sigma2=float(sigma2),
        gains_S=gains_S,
        gains_B=gains_B,
        K=K,
        seed=seed,
        tag=tag,
    )
    blocks = parallel_map(fn, range(-(-reps // BLOCK)), threads)
    se_su = np.concatenate([b[0] for b in blocks])[:reps]
    se_b = np.concatenate([b[1] for b in blocks])[:reps]
    if not (np.all(np.isfinite(se_su)) and np.all(np.isfinite(se_b))):
        raise NonFiniteEvaluation("SPSA produced non-finite iterates")
    d = se_b - se_su
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        t_stat, p_su, p_b, degenerate, se = np.nan, np.nan, np.nan, True, 0.0
    else:
        se = sd / np.sqrt(reps)
        t_stat = mean / se
        p_su = float(stats.t.sf(t_stat, reps - 1))
        p_b = float(stats.t.cdf(t_stat, reps - 1))
        degenerate = False
    return SpsaComparison(
        mse_bernoulli=float(se_b.mean()),
        mse_su=float(se_su.mean()),
        diff_mean=mean,
        diff_se=float(se),
        t_stat=float(t_stat),
        p_su_better=p_su,
        p_bernoulli_better=p_b,
        degenerate=degenerate,
        reps=reps,
        K=K,
        seed=seed,
    )


def segmented_uniform_moments(draws):
    """Sample mean, variance and ``mean(1/D^2)`` of perturbation draws."""
    d = np.asarray(draws, dtype=float)
    return float(d.mean()), float(d.var()), float(np.mean(1.0 / d**2))

