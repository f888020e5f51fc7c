"""Maximum-likelihood solvers: damped Newton and bounded random search."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .exceptions import FimlabError, NotConverged, SingularHessian
from .numerics import as_generator

_ROUNDING_SLACK = 8.0 * np.finfo(float).eps


@dataclass
class SolveOptions:
    max_iters: int = 200
    grad_tol: float = 1e-8
    step_damping: float = 0.5
    init: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0.0 < self.step_damping < 1.0:
            raise ValueError("step_damping must lie in (0, 1)")


@dataclass
class SearchOptions:
    """Settings for the annealed localized random search.

    The Gaussian step scale starts at ``step0`` (relative to the box width)
    and shrinks geometrically to ``step0 * final_ratio`` over the budget.
    """

    budget: int = 4000
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    step0: float = 0.05
    final_ratio: float = 1e-4
    ftol: float = 1e-6
    init: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


@dataclass
class MleResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    value: float
    history: list = field(default_factory=list)


def _projected_grad(g, theta, lo, hi):
    """Zero the components that push against an active bound."""
    g = g.copy()
    g[(theta <= lo) & (g > 0)] = 0.0
    g[(theta >= hi) & (g < 0)] = 0.0
    return g


def _safe_value(model, theta, data):
    try:
        val = model.neg_log_lik(theta, data)
    except (FimlabError, ValueError, FloatingPointError, np.linalg.LinAlgError):
        return np.inf
    return val if np.isfinite(val) else np.inf


def _newton_direction(h, g):
    """Newton direction if the Hessian is positive definite, else None."""
    try:
        factor = sla.cho_factor(h, lower=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return None
    if np.any(np.diag(factor[0]) <= 0):
        return None
    return -sla.cho_solve(factor, g, check_finite=False)


def newton_mle(model, data, opts: SolveOptions | None = None, raise_on_failure=True):
    """Damped Newton iteration with backtracking and box projection.

    Each iteration tries the Newton step; when the Hessian is not positive
    definite (or the Newton step fails to decrease the objective) a scaled
    steepest-descent step is tried instead. Accepted steps never increase
    the negative log-likelihood beyond a few ulps of rounding.

    Raises:
        SingularHessian: no descent step could be formed from a non-PD Hessian.
        NotConverged: the iteration budget ran out (result attached).
    """
    opts = opts or SolveOptions()
    lo, hi = model.lower_bounds(), model.upper_bounds()
    theta = model.project(model.default_init(data) if opts.init is None else opts.init)
    value = model.neg_log_lik(theta, data)
    history = [value]
    gnorm = np.inf
    for it in range(opts.max_iters + 1):
        g = model.grad(theta, data)
        pg = _projected_grad(g, theta, lo, hi)
        gnorm = float(np.max(np.abs(pg)))
        if gnorm <= opts.grad_tol:
            return MleResult(theta, True, it, gnorm, value, history)
        if it == opts.max_iters:
            break
        h = model.hessian(theta, data)
        d_newton = _newton_direction(h, g)
        candidates = []
        if d_newton is not None:
            candidates.append(d_newton)
        candidates.append(-g / max(1.0, float(np.max(np.abs(g)))))
        accepted = False
        for k, direction in enumerate(candidates):
            step = 1.0
            slack = _ROUNDING_SLACK * max(1.0, abs(value))
            while step > 1e-14:
                cand = model.project(theta + step * direction)
                cand_value = _safe_value(model, cand, data)
                if cand_value <= value + slack and not np.array_equal(cand, theta):
                    accepted = True
                    break
                step *= opts.step_damping
            if accepted:
                break
        if not accepted:
            if d_newton is None:
                raise SingularHessian(
                    f"Hessian not positive definite and gradient step failed (|g|={gnorm:.3g})"
                )
            break
        theta, value = cand, cand_value
        history.append(value)
    result = MleResult(theta, False, it, gnorm, value, history)
    if raise_on_failure:
        raise NotConverged(f"Newton stopped with |g|={gnorm:.3g} after {it} iterations", result)
    return result


def stochastic_search_mle(model, data, rng, opts: SearchOptions | None = None, objective=None):
    """Annealed localized random search inside a box.

    A Gaussian step around the current point is proposed, projected into the
    box, and accepted only if it lowers the objective; the step scale decays
    geometrically over the evaluation budget. The best point is always
    returned; ``converged`` is set when the last quarter of the budget
    improved the objective by less than ``ftol``.
    """
    opts = opts or SearchOptions()
    gen = as_generator(rng)
    f = objective if objective is not None else (lambda t: _safe_value(model, t, data))
    lo = np.asarray(model.lower_bounds() if opts.lower is None else opts.lower, dtype=float)
    hi = np.asarray(opts.upper if opts.upper is not None else np.full(lo.shape, 20.0), dtype=float)
    hi = np.minimum(hi, model.upper_bounds()) if objective is None else hi
    width = hi - lo
    if np.any(~np.isfinite(width)) or np.any(width <= 0):
        raise ValueError("search box must be finite and non-empty")
    if opts.init is not None:
        start = opts.init
    elif objective is None:
        start = model.default_init(data)
    else:
        start = lo + 0.5 * width
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    fx = f(x)
    history = [fx]
    decay = opts.final_ratio ** (1.0 / max(opts.budget - 1, 1))
    scale = opts.step0 * width
    checkpoint = int(0.75 * opts.budget)
    f_checkpoint = fx
    steps = gen.standard_normal((opts.budget - 1, x.size))
    for k in range(opts.budget - 1):
        if k == checkpoint:
            f_checkpoint = fx
        cand = np.clip(x + scale * steps[k], lo, hi)
        fc = f(cand)
        if fc < fx:
            x, fx = cand, fc
            history.append(fx)
        scale = scale * decay
    converged = bool(np.isfinite(fx) and f_checkpoint - fx < opts.ftol)
    return MleResult(x, converged, opts.budget, np.nan, float(fx), history)


def fit(model, data, rng=None, newton_opts=None, search_opts=None):
    """Designated solver per model: random search for dependent data, Newton otherwise.

    The result is passed through ``model.canonical`` to fix label ordering.
    """
    if model.independent:
        res = newton_mle(model, data, newton_opts)
    else:
        if rng is None:
            raise ValueError("random search needs a random stream")
        res = stochastic_search_mle(model, data, rng, search_opts)
    res.theta = model.canonical(res.theta)
    return res
