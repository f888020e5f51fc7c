"""Monte Carlo estimation of the Fisher information from Hessian estimates.

Each pseudo-dataset ``i`` is simulated at ``theta`` and ``M`` simultaneous
perturbation Hessian estimates are formed on it. The basic estimator
averages them; the feedback estimator subtracts the zero-mean perturbation
artifact ``psi`` evaluated at the running estimate. With
``indep=True`` every observation gets its own perturbation and its own
running estimate, and the per-observation pieces are summed.

Basic and feedback estimates are always computed from the same draws, so
benchmark comparisons between them are paired.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from scipy import stats

from .exceptions import NotIndependentData, ZeroPerturbationComponent, ZeroReference
from .harness import parallel_map
from .numerics import RngStream, as_generator, spectral_norm, stream_for, symmetrize
from .spsa import get_distribution

MODES = ("gradient", "likelihood")


@dataclass(frozen=True)
class HessianEstimateConfig:
    """Settings for the Monte Carlo FIM estimators.

    Attributes:
        c: perturbation scale.
        M: Hessian estimates per pseudo-dataset.
        N: number of pseudo-datasets.
        mode: "gradient" uses exact gradients; "likelihood" estimates them
            from four likelihood values per Hessian estimate.
        dist: perturbation distribution name.
    """

    c: float = 1e-4
    M: int = 2
    N: int = 2000
    mode: str = "gradient"
    dist: str = "bernoulli_pm1"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        get_distribution(self.dist)


@dataclass
class FimEstimate:
    matrix: np.ndarray
    method: str
    config: HessianEstimateConfig
    seed: str = ""


# -- building blocks -------------------------------------------------------------


def _check_delta(delta):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta == 0):
        raise ZeroPerturbationComponent("perturbation has a zero component")
    return delta


def _outer_sym(dg, delta, c):
    """``0.5 * (G + G^T)`` with ``G = dg/(2c) (1/delta)^T``, batched over leading axes."""
    g = (dg / (2.0 * c))[..., :, None] * (1.0 / delta)[..., None, :]
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def one_sided_sp_gradient(f, theta, c, delta_tilde):
    """``(f(theta + c d) - f(theta)) / (c d)``; batched over leading axes of ``theta``."""
    delta_tilde = _check_delta(delta_tilde)
    diff = np.asarray(f(theta + c * delta_tilde)) - np.asarray(f(theta))
    return diff[..., None] / (c * delta_tilde)


def sp_hessian_estimate(grad, theta, c, delta, value=None, delta_tilde=None):
    """Symmetrized simultaneous perturbation Hessian estimate.

    Args:
        grad: gradient oracle ``theta -> g``; ignored when ``value`` is given.
        value: likelihood oracle; when supplied, each gradient is itself a
            one-sided SP estimate along ``delta_tilde`` with the same ``c``.
    """
    delta = _check_delta(delta)
    theta = np.asarray(theta, dtype=float)
    if value is not None:
        if delta_tilde is None:
            raise ValueError("likelihood mode needs an inner perturbation")
        g_plus = one_sided_sp_gradient(value, theta + c * delta, c, delta_tilde)
        g_minus = one_sided_sp_gradient(value, theta - c * delta, c, delta_tilde)
    else:
        g_plus, g_minus = grad(theta + c * delta), grad(theta - c * delta)
    return _outer_sym(np.asarray(g_plus) - np.asarray(g_minus), delta, c)


def psi(H, delta):
    """``0.5 (H D + D^T H)`` with ``D = delta (1/delta)^T - I``; batched."""
    delta = _check_delta(delta)
    p = delta.shape[-1]
    d = delta[..., :, None] * (1.0 / delta)[..., None, :] - np.eye(p)
    H = np.asarray(H, dtype=float)
    return 0.5 * (H @ d + np.swapaxes(d, -1, -2) @ H)


def feedback_step(F_prev, h_hats, deltas, i):
    """One step of the feedback recursion in ``i`` (1-based).

    ``h_hats`` and ``deltas`` stack the ``M`` estimates of dataset ``i`` on
    axis 0; extra middle axes (one per observation) broadcast against
    ``F_prev``.
    """
    M = len(h_hats)
    corrected = np.asarray(h_hats) - psi(F_prev, deltas)
    return ((i - 1.0) / i) * F_prev + corrected.sum(axis=0) / (i * M)


def relative_error(est, ref):
    """Spectral-norm relative error ``||est - ref|| / ||ref||``."""
    est, ref = np.asarray(est, dtype=float), np.asarray(ref, dtype=float)
    if est.shape != ref.shape:
        raise ValueError("shape mismatch")
    denom = spectral_norm(ref)
    if denom == 0:
        raise ZeroReference("reference matrix is zero")
    return spectral_norm(est - ref) / denom


# -- estimators -------------------------------------------------------------------


def _generators(rng):
    if isinstance(rng, RngStream):
        return rng.child("pseudo").generator, rng.child("perturb").generator
    gen = as_generator(rng)
    return gen, gen


def _oracles(model, data, indep):
    if indep:
        return partial(model.obs_grad, data=data), partial(model.obs_nll, data=data)
    return partial(model.grad, data=data), partial(model.neg_log_lik, data=data)


def _draw_estimates(model, theta, data, cfg, pert_gen, indep, n):
    """``M`` Hessian estimates for one pseudo-dataset and their perturbations."""
    dist = get_distribution(cfg.dist)
    shape = (cfg.M, n, model.p) if indep else (cfg.M, model.p)
    deltas = dist.sample(pert_gen, shape)
    tildes = dist.sample(pert_gen, shape) if cfg.mode == "likelihood" else None
    grad, value = _oracles(model, data, indep)
    base = np.broadcast_to(theta, shape[1:]) if indep else theta
    h = []
    for k in range(cfg.M):
        if cfg.mode == "likelihood":
            h.append(sp_hessian_estimate(None, base, cfg.c, deltas[k], value, tildes[k]))
        else:
            h.append(sp_hessian_estimate(grad, base, cfg.c, deltas[k]))
    return np.array(h), deltas


def estimate_fim(model, theta, n, cfg: HessianEstimateConfig, rng, indep=False):
    """Basic and feedback estimates of ``F_n(theta)`` from one set of draws.

    Returns ``{"basic": FimEstimate, "feedback": FimEstimate}``; with
    ``indep`` the methods are named ``indep_basic`` and ``indep_feedback``.

    Raises:
        NotIndependentData: ``indep`` requested for a dependent-data model.
    """
    if indep and not model.independent:
        raise NotIndependentData(f"{model.name} observations are not independent")
    theta = np.asarray(theta, dtype=float)
    data_gen, pert_gen = _generators(rng)
    p = model.p
    state_shape = (n, p, p) if indep else (p, p)
    total = np.zeros(state_shape)
    fb = np.zeros(state_shape)
    for i in range(1, cfg.N + 1):
        data = model.sample(theta, n, data_gen)
        h, deltas = _draw_estimates(model, theta, data, cfg, pert_gen, indep, n)
        total += h.sum(axis=0)
        fb = feedback_step(fb, h, deltas, i)
    basic = total / (cfg.N * cfg.M)
    if indep:
        basic, fb = basic.sum(axis=0), fb.sum(axis=0)
    prefix = "indep_" if indep else ""
    tag = repr(rng)
    return {
        "basic": FimEstimate(symmetrize(basic), prefix + "basic", cfg, tag),
        "feedback": FimEstimate(symmetrize(fb), prefix + "feedback", cfg, tag),
    }


def fim_basic(model, theta, n, cfg, rng):
    """Double average of SP Hessian estimates over pseudo-datasets."""
    return estimate_fim(model, theta, n, cfg, rng)["basic"]


def fim_feedback(model, theta, n, cfg, rng):
    """Feedback-corrected recursive average, started from the zero matrix."""
    return estimate_fim(model, theta, n, cfg, rng)["feedback"]


def fim_indep(model, theta, n, cfg, rng, feedback=False):
    """Per-observation perturbation variant (optionally with feedback)."""
    return estimate_fim(model, theta, n, cfg, rng, indep=True)["feedback" if feedback else "basic"]


# -- benchmark ---------------------------------------------------------------------


def _mean_ci(x, level=0.95):
    x = np.asarray(x, dtype=float)
    m = float(x.mean())
    if len(x) < 2:
        return m, (m, m)
    half = float(stats.t.ppf(0.5 + level / 2, len(x) - 1) * x.std(ddof=1) / np.sqrt(len(x)))
    return m, (m - half, m + half)


@dataclass
class FimBenchmark:
    """Relative errors of basic vs feedback estimates over paired runs.

    ``p_value`` is the one-sided matched-pairs t-test of the alternative
    "feedback error < basic error".
    """

    errors_basic: np.ndarray
    errors_feedback: np.ndarray
    mean_basic: float
    mean_feedback: float
    ci_basic: tuple
    ci_feedback: tuple
    p_value: float
    runs: int
    indep: bool
    config: dict = field(default_factory=dict)

    @property
    def methods(self):
        return ("indep_basic", "indep_feedback") if self.indep else ("basic", "feedback")


def _benchmark_run(run, model, theta, n, cfg, seed, tag, indep, reference):
    est = estimate_fim(model, theta, n, cfg, stream_for(seed, tag, run), indep=indep)
    return relative_error(est["basic"].matrix, reference), relative_error(est["feedback"].matrix, reference)


def paired_one_sided_p(a, b):
    """p-value for the alternative ``mean(b) < mean(a)`` from paired samples."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    sd = d.std(ddof=1)
    if sd == 0:
        return np.nan
    t = d.mean() / (sd / np.sqrt(len(d)))
    return float(stats.t.sf(t, len(d) - 1))


def fim_benchmark(model, theta, n, cfg, runs, seed=0, tag="mcfim", indep=False, reference=None, threads=1):
    """Repeat the estimators ``runs`` times and compare relative errors.

    Run ``r`` draws from ``stream_for(seed, tag, r)``, so its pseudo-data and
    perturbations do not depend on how many runs are requested, and a
    larger ``N`` extends (rather than reshuffles) the draws of a smaller one.
    """
    if runs < 2:
        raise ValueError("runs must be >= 2")
    theta = np.asarray(theta, dtype=float)
    ref = model.expected_fim(theta, n) if reference is None else np.asarray(reference, dtype=float)
    fn = partial(
        _benchmark_run, model=model, theta=theta, n=n, cfg=cfg, seed=seed, tag=tag, indep=indep, reference=ref
    )
    out = np.array(parallel_map(fn, range(runs), threads))
    eb, ef = out[:, 0], out[:, 1]
    mb, cib = _mean_ci(eb)
    mf, cif = _mean_ci(ef)
    return FimBenchmark(eb, ef, mb, mf, cib, cif, paired_one_sided_p(eb, ef), runs, indep, asdict(cfg))
