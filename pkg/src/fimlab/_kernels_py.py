"""Pure-NumPy Kalman likelihood kernels (fallback for the compiled module).

Both functions take the scalar-observation state-space model

    x_t = A x_{t-1} + w_t,  w_t ~ N(0, diag(q))
    y_t = C x_t + v_t,      v_t ~ N(0, R)

and return the innovations form of the negative log-likelihood with the
constant term dropped: 0.5 * sum(log S_t + eps_t**2 / S_t).
"""
import numpy as np

BACKEND = "python"


def ss_nll(A, C, R, q, mu0, Sigma0, y):
    """Negative log-likelihood; returns nan if some S_t <= 0."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float).ravel()
    Q = np.diag(np.asarray(q, dtype=float))
    xf = np.array(mu0, dtype=float)
    Pf = np.array(Sigma0, dtype=float)
    total = 0.0
    for yt in np.asarray(y, dtype=float):
        xp = A @ xf
        Pp = A @ Pf @ A.T + Q
        u = Pp @ C
        S = C @ u + R
        if not S > 0.0:
            return float("nan")
        eps = yt - C @ xp
        total += 0.5 * (np.log(S) + eps * eps / S)
        xf = xp + u * (eps / S)
        Pf = Pp - np.outer(u, u) / S
    return float(total)


def ss_nll_derivs(A, C, R, q, mu0, Sigma0, y):
    """Likelihood, gradient and Hessian in ``q`` via sensitivity recursions.

    First and second derivatives of the predicted covariance and state are
    propagated alongside the filter; the likelihood terms are differentiated
    per step. Returns ``(nll, grad, hess)``; nll is nan if some S_t <= 0.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float).ravel()
    q = np.asarray(q, dtype=float)
    l = A.shape[0]
    p = q.size
    Q = np.diag(q)
    xf = np.array(mu0, dtype=float)
    Pf = np.array(Sigma0, dtype=float)
    dxf = np.zeros((p, l))
    dPf = np.zeros((p, l, l))
    d2xf = np.zeros((p, p, l))
    d2Pf = np.zeros((p, p, l, l))
    E = np.zeros((p, l, l))
    for j in range(p):
        E[j, j, j] = 1.0
    total = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    for yt in np.asarray(y, dtype=float):
        xp = A @ xf
        dxp = dxf @ A.T
        d2xp = d2xf @ A.T
        Pp = A @ Pf @ A.T + Q
        dPp = A @ dPf @ A.T + E
        d2Pp = A @ d2Pf @ A.T
        u = Pp @ C
        du = dPp @ C
        d2u = d2Pp @ C
        S = C @ u + R
        if not S > 0.0:
            return float("nan"), np.full(p, np.nan), np.full((p, p), np.nan)
        dS = du @ C
        d2S = d2u @ C
        eps = yt - C @ xp
        de = -(dxp @ C)
        d2e = -(d2xp @ C)

        total += 0.5 * (np.log(S) + eps * eps / S)
        grad += 0.5 * (dS / S + 2.0 * eps * de / S - eps * eps * dS / S**2)
        dSdS = np.outer(dS, dS)
        dede = np.outer(de, de)
        edS = np.outer(de, dS)
        hess += 0.5 * (
            d2S / S
            - dSdS / S**2
            + 2.0 * dede / S
            + 2.0 * eps * d2e / S
            - 2.0 * eps * (edS + edS.T) / S**2
            - eps * eps * d2S / S**2
            + 2.0 * eps * eps * dSdS / S**3
        )

        m = eps / S
        dm = de / S - eps * dS / S**2
        d2m = (
            d2e / S
            - (edS + edS.T) / S**2
            - eps * d2S / S**2
            + 2.0 * eps * dSdS / S**3
        )
        xf = xp + u * m
        dxf = dxp + du * m + np.outer(dm, u)
        d2xf = (
            d2xp
            + d2u * m
            + du[:, None, :] * dm[None, :, None]
            + du[None, :, :] * dm[:, None, None]
            + d2m[:, :, None] * u
        )

        N = np.outer(u, u)
        dN = du[:, :, None] * u[None, None, :] + u[None, :, None] * du[:, None, :]
        d2N = (
            d2u[:, :, :, None] * u
            + u[:, None] * d2u[:, :, None, :]
            + du[:, None, :, None] * du[None, :, None, :]
            + du[None, :, :, None] * du[:, None, None, :]
        )
        Pf = Pp - N / S
        dPf = dPp - dN / S + N[None] * (dS / S**2)[:, None, None]
        d2Pf = (
            d2Pp
            - d2N / S
            + (dN[:, None] * dS[None, :, None, None] + dN[None, :] * dS[:, None, None, None]) / S**2
            + N * (d2S / S**2)[:, :, None, None]
            - 2.0 * N * (dSdS / S**3)[:, :, None, None]
        )
    hess = 0.5 * (hess + hess.T)
    return float(total), grad, hess
