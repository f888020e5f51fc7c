"""Null cumulants, standardized scores and the asymptotic gap between estimators.

Index conventions follow the derivative arrays of the negative
log-likelihood: ``U_r`` (gradient), ``U_rs`` (Hessian), ``U_rst`` (third
derivatives), each per observation. Cumulants are averaged over the ``n``
observations; "null" means both differentiation and expectation happen at
the true parameter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import discrepancy_study
from .numerics import stream_for, sym_inverse

THIRD_DERIV_STEP = 1e-4


@dataclass
class CumulantSet:
    """Average per-observation null cumulants.

    Attributes:
        k_rs: mean Hessian entry.
        k_rst: mean third derivative.
        k_r_s: covariance of scores.
        k_rs_t: covariance of Hessian entries with scores.
        k_inv: inverse of ``k_r_s``.
        bartlett_gap, bartlett_se: mean and standard error of
            ``U_rs - U_r U_s``, zero in expectation under regularity.
    """

    k_rs: np.ndarray
    k_rst: np.ndarray
    k_r_s: np.ndarray
    k_rs_t: np.ndarray
    k_inv: np.ndarray
    n: int
    reps: int
    exact: bool = False
    bartlett_gap: np.ndarray | None = None
    bartlett_se: np.ndarray | None = None

    @property
    def projection(self):
        """``sum_v k_{st,v} k^{v,u}``, shape ``(p, p, p)`` indexed ``[s, t, u]``."""
        return np.einsum("stv,vu->stu", self.k_rs_t, self.k_inv)


@dataclass
class ScoreSample:
    Z: np.ndarray
    Z2: np.ndarray
    Y: np.ndarray


def obs_third_derivs(model, theta, data, step=THIRD_DERIV_STEP):
    """Per-observation third derivatives by central differences of ``obs_hess``.

    Shape ``(n, p, p, p)`` with the differenced coordinate last.
    """
    theta = np.asarray(theta, dtype=float)
    out = []
    for j in range(theta.size):
        h = step * max(1.0, abs(theta[j]))
        e = np.zeros_like(theta)
        e[j] = h
        out.append((model.obs_hess(theta + e, data) - model.obs_hess(theta - e, data)) / (2.0 * h))
    return np.stack(out, axis=-1)


def _per_obs(model, theta, data):
    return model.obs_grad(theta, data), model.obs_hess(theta, data), obs_third_derivs(model, theta, data)


def null_cumulants(model, theta_star, n, reps, seed=0, tag="cumulants"):
    """Monte Carlo (or exact, when the model provides them) null cumulants."""
    theta_star = np.asarray(theta_star, dtype=float)
    if hasattr(model, "exact_cumulants"):
        k_rs, k_rst, k_r_s, k_rs_t = model.exact_cumulants(theta_star)
        return CumulantSet(k_rs, k_rst, k_r_s, k_rs_t, sym_inverse(k_r_s), n, 0, exact=True)
    if reps < 2:
        raise ValueError("reps must be >= 2")
    u1, u2, u3 = [], [], []
    for m in range(reps):
        data = model.sample(theta_star, n, stream_for(seed, tag, m, "data"))
        a, b, c = _per_obs(model, theta_star, data)
        u1.append(a)
        u2.append(b)
        u3.append(c)
    u1, u2, u3 = np.array(u1), np.array(u2), np.array(u3)
    # identical observations share one distribution, so pool over i as well
    axes = (0, 1) if model.identical else (0,)
    k_rs = u2.mean(axis=(0, 1))
    k_rst = u3.mean(axis=(0, 1))
    m1 = u1.mean(axis=axes, keepdims=True)
    m2 = u2.mean(axis=axes, keepdims=True)
    c1 = u1 - m1
    k_r_s = np.einsum("mir,mis->rs", c1, c1) / (reps * n)
    k_rs_t = np.einsum("mirs,mit->rst", u2 - m2, c1) / (reps * n)
    k_r_s = 0.5 * (k_r_s + k_r_s.T)
    bart = (u2 - u1[..., :, None] * u1[..., None, :]).reshape(-1, *k_rs.shape)
    return CumulantSet(
        k_rs=0.5 * (k_rs + k_rs.T),
        k_rst=k_rst,
        k_r_s=k_r_s,
        k_rs_t=k_rs_t,
        k_inv=sym_inverse(k_r_s),
        n=n,
        reps=reps,
        bartlett_gap=bart.mean(axis=0),
        bartlett_se=bart.std(axis=0, ddof=1) / np.sqrt(bart.shape[0]),
    )


def score_draw(model, data, theta_star, cumulants: CumulantSet) -> ScoreSample:
    """Standardized first/second-order scores and the orthogonalized ``Y``."""
    n = model.nobs(data)
    root = np.sqrt(n)
    z = model.grad(theta_star, data) / root
    z2 = (model.hessian(theta_star, data) - n * cumulants.k_rs) / root
    y = z2 - np.einsum("stu,u->st", cumulants.projection, z)
    return ScoreSample(z, z2, y)


def score_draws(model, theta_star, n, reps, cumulants, seed=0, tag="scores"):
    """``reps`` independent score samples stacked as arrays ``(Z, Z2, Y)``."""
    zs, z2s, ys = [], [], []
    for m in range(reps):
        data = model.sample(theta_star, n, stream_for(seed, tag, m, "data"))
        s = score_draw(model, data, theta_star, cumulants)
        zs.append(s.Z)
        z2s.append(s.Z2)
        ys.append(s.Y)
    return np.array(zs), np.array(z2s), np.array(ys)


def score_y_correlations(z, y):
    """``corr(Z_r, Y_st)`` for every index triple, shape ``(p, p, p)`` as ``[r, s, t]``.

    Entries where ``Y_st`` has no variance are reported as 0.
    """
    zc = z - z.mean(axis=0)
    yc = y - y.mean(axis=0)
    cov = np.einsum("mr,mst->rst", zc, yc) / (len(z) - 1)
    sz = zc.std(axis=0, ddof=1)
    sy = yc.std(axis=0, ddof=1)
    denom = sz[:, None, None] * sy[None, :, :]
    out = np.zeros_like(cov)
    ok = denom > 0
    out[ok] = cov[ok] / denom[ok]
    return out


def gap_terms(y, z, cumulants: CumulantSet, n):
    """``sqrt(n) A`` and ``sqrt(n) B`` for each draw, shape ``(reps, p, p)``.

    ``A_nrs = n^-1/2 sum k^{r,t} k^{s,u} Y_tu`` and
    ``B_nrs = n^-1/2 sum k^{r,t} k^{s,u} (k_tuv - k_tu,v) k^{v,w} Z_w``.
    """
    k = cumulants.k_inv
    a = np.einsum("rt,mtu,su->mrs", k, y, k)
    kz = z @ k
    c = np.einsum("tuv,mv->mtu", cumulants.k_rst - cumulants.k_rs_t, kz)
    b = np.einsum("rt,mtu,su->mrs", k, c, k)
    return a, b


def theorem1_gap_check(
    model,
    theta_star,
    n,
    reps,
    seed=0,
    reps_target=None,
    cumulant_reps=200,
    score_reps=None,
    threads=1,
    max_failure_rate=0.01,
):
    """Compare the MSE gap between estimators with its leading-order term.

    ``lhs = n (M_H - M_F)`` comes from a discrepancy study with ``reps``
    outer replications; ``rhs = n E(A^2)`` from ``score_reps`` independent
    score draws. Both carry Monte Carlo standard errors. ``cross`` is the
    estimate of ``n E(A B)``, which vanishes asymptotically.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    reps_target = reps if reps_target is None else reps_target
    score_reps = reps if score_reps is None else score_reps
    cum = null_cumulants(model, theta_star, n, cumulant_reps, seed, "theorem1-cumulants")
    z, _, y = score_draws(model, theta_star, n, score_reps, cum, seed, "theorem1-scores")
    a, b = gap_terms(y, z, cum, n)
    a2 = a * a
    ab = a * b
    rep = discrepancy_study(
        model, theta_star, n, reps, reps_target, seed, "theorem1", threads, max_failure_rate
    )
    root = np.sqrt(score_reps)
    return {
        "lhs": n * rep.diff,
        "lhs_se": n * rep.se_diff,
        "rhs": a2.mean(axis=0),
        "rhs_se": a2.std(axis=0, ddof=1) / root,
        "cross": ab.mean(axis=0),
        "cross_se": ab.std(axis=0, ddof=1) / root,
        "report": rep,
        "cumulants": cum,
    }


def condition_a9_matrix(model, theta_star, n, reps, seed=0, tag="a9", cumulants=None, cumulant_reps=200):
    """Average per-observation variance of the orthogonalized second-order score.

    For each observation, ``V_i = K (U2_i - sum_v k_{..,v} (K U1_i)_v) K``
    with ``K = k^{-1}``; the result is ``n^-1 sum_i var(V_i)`` for every
    entry, with a standard error. Constant shifts do not affect the variance,
    so the per-observation mean Hessian is not subtracted explicitly.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    cum = cumulants or null_cumulants(model, theta_star, n, cumulant_reps, seed, tag + "-cumulants")
    k = cum.k_inv
    vals = []
    for m in range(reps):
        data = model.sample(theta_star, n, stream_for(seed, tag, m, "data"))
        u1 = model.obs_grad(theta_star, data)
        u2 = model.obs_hess(theta_star, data)
        inner = u2 - np.einsum("stv,iv->ist", cum.k_rs_t, u1 @ k)
        vals.append(np.einsum("rt,itu,su->irs", k, inner, k))
    v = np.array(vals)
    if model.identical:
        flat = v.reshape(-1, *v.shape[2:])
        centred = (flat - flat.mean(axis=0)) ** 2
        var = centred.mean(axis=0) * len(flat) / (len(flat) - 1)
        se = centred.std(axis=0, ddof=1) / np.sqrt(len(flat))
        return var, se
    centred = (v - v.mean(axis=0)) ** 2
    var_i = centred.sum(axis=0) / (reps - 1)
    se_i = centred.std(axis=0, ddof=1) / np.sqrt(reps)
    return var_i.mean(axis=0), np.sqrt((se_i**2).sum(axis=0)) / n


def condition_a9_variance(model, theta_star, n, reps, seed=0, entry=(0, 0), **kwargs):
    """Single entry of ``condition_a9_matrix`` as ``(value, se)``."""
    var, se = condition_a9_matrix(model, theta_star, n, reps, seed, **kwargs)
    r, s = entry
    return float(var[r, s]), float(se[r, s])
