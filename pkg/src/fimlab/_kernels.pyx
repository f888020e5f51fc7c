# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Kalman likelihood kernels.

Same contract as ``fimlab._kernels_py``; the recursions are written as
explicit loops over small dense blocks so that one filter pass over a few
hundred observations costs microseconds.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

BACKEND = "cython"


cdef double NAN_VALUE = float("nan")


def ss_nll(A, C, double R, q, mu0, Sigma0, y):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(np.ravel(C), dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t l = a.shape[0]
    cdef double[::1] xf = np.array(mu0, dtype=np.float64, copy=True).ravel()
    cdef double[:, ::1] Pf = np.array(Sigma0, dtype=np.float64, copy=True)
    cdef double[::1] xp = np.empty(l)
    cdef double[:, ::1] Pp = np.empty((l, l))
    cdef double[:, ::1] AP = np.empty((l, l))
    cdef double[::1] u = np.empty(l)
    cdef Py_ssize_t t, i, j, k, n = yv.shape[0]
    cdef double S, eps, acc, total = 0.0
    with nogil:
        for t in range(n):
            for i in range(l):
                acc = 0.0
                for k in range(l):
                    acc = acc + a[i, k] * xf[k]
                xp[i] = acc
                for j in range(l):
                    acc = 0.0
                    for k in range(l):
                        acc = acc + a[i, k] * Pf[k, j]
                    AP[i, j] = acc
            for i in range(l):
                for j in range(l):
                    acc = 0.0
                    for k in range(l):
                        acc = acc + AP[i, k] * a[j, k]
                    Pp[i, j] = acc
                Pp[i, i] = Pp[i, i] + qv[i]
            S = R
            eps = yv[t]
            for i in range(l):
                acc = 0.0
                for k in range(l):
                    acc = acc + Pp[i, k] * c[k]
                u[i] = acc
                S = S + c[i] * acc
                eps = eps - c[i] * xp[i]
            if not S > 0.0:
                total = NAN_VALUE
                break
            total = total + 0.5 * (log(S) + eps * eps / S)
            for i in range(l):
                xf[i] = xp[i] + u[i] * eps / S
                for j in range(l):
                    Pf[i, j] = Pp[i, j] - u[i] * u[j] / S
    return total


def ss_nll_derivs(A, C, double R, q, mu0, Sigma0, y):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(np.ravel(C), dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t l = a.shape[0]
    cdef Py_ssize_t p = qv.shape[0]
    cdef Py_ssize_t n = yv.shape[0]

    cdef double[::1] xf = np.array(mu0, dtype=np.float64, copy=True).ravel()
    cdef double[:, ::1] Pf = np.array(Sigma0, dtype=np.float64, copy=True)
    cdef double[:, ::1] dxf = np.zeros((p, l))
    cdef double[:, :, ::1] dPf = np.zeros((p, l, l))
    cdef double[:, :, ::1] d2xf = np.zeros((p, p, l))
    cdef double[:, :, :, ::1] d2Pf = np.zeros((p, p, l, l))

    cdef double[::1] xp = np.empty(l)
    cdef double[:, ::1] dxp = np.empty((p, l))
    cdef double[:, :, ::1] d2xp = np.empty((p, p, l))
    cdef double[:, ::1] Pp = np.empty((l, l))
    cdef double[:, :, ::1] dPp = np.empty((p, l, l))
    cdef double[:, :, :, ::1] d2Pp = np.empty((p, p, l, l))
    cdef double[:, ::1] tmp = np.empty((l, l))
    cdef double[::1] u = np.empty(l)
    cdef double[:, ::1] du = np.empty((p, l))
    cdef double[:, :, ::1] d2u = np.empty((p, p, l))
    cdef double[::1] dS = np.empty(p)
    cdef double[:, ::1] d2S = np.empty((p, p))
    cdef double[::1] de = np.empty(p)
    cdef double[:, ::1] d2e = np.empty((p, p))
    cdef double[::1] dm = np.empty(p)
    cdef double[:, ::1] d2m = np.empty((p, p))

    grad_arr = np.zeros(p)
    hess_arr = np.zeros((p, p))
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] hess = hess_arr

    cdef Py_ssize_t t, i, j, k, r, s
    cdef double S, S2, S3, eps, m, acc, total = 0.0
    cdef bint bad = False

    with nogil:
        for t in range(n):
            # predicted state and its sensitivities
            for i in range(l):
                acc = 0.0
                for k in range(l):
                    acc = acc + a[i, k] * xf[k]
                xp[i] = acc
            for r in range(p):
                for i in range(l):
                    acc = 0.0
                    for k in range(l):
                        acc = acc + a[i, k] * dxf[r, k]
                    dxp[r, i] = acc
                for s in range(r, p):
                    for i in range(l):
                        acc = 0.0
                        for k in range(l):
                            acc = acc + a[i, k] * d2xf[r, s, k]
                        d2xp[r, s, i] = acc
            # predicted covariance: A P A^T (+Q / +E_r)
            _sandwich(a, Pf, tmp, Pp, l)
            for i in range(l):
                Pp[i, i] = Pp[i, i] + qv[i]
            for r in range(p):
                _sandwich(a, dPf[r], tmp, dPp[r], l)
                dPp[r, r, r] = dPp[r, r, r] + 1.0
                for s in range(r, p):
                    _sandwich(a, d2Pf[r, s], tmp, d2Pp[r, s], l)
            # u = P C^T, S = C u + R, eps = y - C xp
            S = R
            eps = yv[t]
            for i in range(l):
                acc = 0.0
                for k in range(l):
                    acc = acc + Pp[i, k] * c[k]
                u[i] = acc
                S = S + c[i] * acc
                eps = eps - c[i] * xp[i]
            if not S > 0.0:
                bad = True
                break
            S2 = S * S
            S3 = S2 * S
            for r in range(p):
                dS[r] = 0.0
                de[r] = 0.0
                for i in range(l):
                    acc = 0.0
                    for k in range(l):
                        acc = acc + dPp[r, i, k] * c[k]
                    du[r, i] = acc
                    dS[r] = dS[r] + c[i] * acc
                    de[r] = de[r] - c[i] * dxp[r, i]
            for r in range(p):
                for s in range(r, p):
                    d2S[r, s] = 0.0
                    d2e[r, s] = 0.0
                    for i in range(l):
                        acc = 0.0
                        for k in range(l):
                            acc = acc + d2Pp[r, s, i, k] * c[k]
                        d2u[r, s, i] = acc
                        d2S[r, s] = d2S[r, s] + c[i] * acc
                        d2e[r, s] = d2e[r, s] - c[i] * d2xp[r, s, i]
            # likelihood and its derivatives
            total = total + 0.5 * (log(S) + eps * eps / S)
            for r in range(p):
                grad[r] = grad[r] + 0.5 * (dS[r] / S + 2.0 * eps * de[r] / S - eps * eps * dS[r] / S2)
                for s in range(r, p):
                    hess[r, s] = hess[r, s] + 0.5 * (
                        d2S[r, s] / S
                        - dS[r] * dS[s] / S2
                        + 2.0 * de[r] * de[s] / S
                        + 2.0 * eps * d2e[r, s] / S
                        - 2.0 * eps * (de[r] * dS[s] + de[s] * dS[r]) / S2
                        - eps * eps * d2S[r, s] / S2
                        + 2.0 * eps * eps * dS[r] * dS[s] / S3
                    )
            # filtered state: xf = xp + u m with m = eps / S
            m = eps / S
            for r in range(p):
                dm[r] = de[r] / S - eps * dS[r] / S2
            for r in range(p):
                for s in range(r, p):
                    d2m[r, s] = (
                        d2e[r, s] / S
                        - (de[r] * dS[s] + de[s] * dS[r]) / S2
                        - eps * d2S[r, s] / S2
                        + 2.0 * eps * dS[r] * dS[s] / S3
                    )
            for i in range(l):
                xf[i] = xp[i] + u[i] * m
            for r in range(p):
                for i in range(l):
                    dxf[r, i] = dxp[r, i] + du[r, i] * m + u[i] * dm[r]
                for s in range(r, p):
                    for i in range(l):
                        d2xf[r, s, i] = (
                            d2xp[r, s, i]
                            + d2u[r, s, i] * m
                            + du[r, i] * dm[s]
                            + du[s, i] * dm[r]
                            + u[i] * d2m[r, s]
                        )
            # filtered covariance: Pf = Pp - u u^T / S
            for i in range(l):
                for j in range(l):
                    Pf[i, j] = Pp[i, j] - u[i] * u[j] / S
            for r in range(p):
                for i in range(l):
                    for j in range(l):
                        dPf[r, i, j] = (
                            dPp[r, i, j]
                            - (du[r, i] * u[j] + u[i] * du[r, j]) / S
                            + u[i] * u[j] * dS[r] / S2
                        )
            for r in range(p):
                for s in range(r, p):
                    for i in range(l):
                        for j in range(l):
                            d2Pf[r, s, i, j] = (
                                d2Pp[r, s, i, j]
                                - (d2u[r, s, i] * u[j] + u[i] * d2u[r, s, j]
                                   + du[r, i] * du[s, j] + du[s, i] * du[r, j]) / S
                                + ((du[r, i] * u[j] + u[i] * du[r, j]) * dS[s]
                                   + (du[s, i] * u[j] + u[i] * du[s, j]) * dS[r]) / S2
                                + u[i] * u[j] * d2S[r, s] / S2
                                - 2.0 * u[i] * u[j] * dS[r] * dS[s] / S3
                            )
    if bad:
        return float("nan"), np.full(p, np.nan), np.full((p, p), np.nan)
    for r in range(p):
        for s in range(r + 1, p):
            hess[s, r] = hess[r, s]
    return total, grad_arr, hess_arr


cdef inline void _sandwich(double[:, ::1] a, double[:, ::1] m, double[:, ::1] tmp,
                           double[:, ::1] out, Py_ssize_t l) noexcept nogil:
    """out = a @ m @ a.T"""
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(l):
        for j in range(l):
            acc = 0.0
            for k in range(l):
                acc = acc + a[i, k] * m[k, j]
            tmp[i, j] = acc
    for i in range(l):
        for j in range(l):
            acc = 0.0
            for k in range(l):
                acc = acc + tmp[i, k] * a[j, k]
            out[i, j] = acc
