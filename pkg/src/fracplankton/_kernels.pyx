# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled O(N^2) solver kernels; see ``_kernels_py`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tgamma, isfinite, pow, expm1, log1p

cnp.import_array()


def abm_weights(double alpha, Py_ssize_t n_steps):
    cdef cnp.ndarray[double] b = np.empty(n_steps)
    cdef cnp.ndarray[double] c = np.empty(n_steps)
    cdef cnp.ndarray[double] a0 = np.empty(n_steps)
    cdef double a1 = alpha + 1.0
    cdef double k
    cdef Py_ssize_t i
    for i in range(n_steps):
        k = <double>i
        if i == 0:
            b[i] = 1.0
        else:
            b[i] = pow(k, alpha) * expm1(alpha * log1p(1.0 / k))
        c[i] = pow(k + 2.0, a1) + pow(k, a1) - 2.0 * pow(k + 1.0, a1)
        a0[i] = pow(k, a1) - (k - alpha) * pow(k + 1.0, alpha)
    return b, c, a0


cdef inline int _rhs(const double* p, double y1, double y2, double y3, double* out) nogil:
    cdef double c0 = p[0], c1 = p[1], c2 = p[2], c3 = p[3], c4 = p[4], h = p[5]
    cdef double H = p[6], delta = p[7], v = p[8], B = p[9], bp = p[10], xi = p[11]
    cdef double m = p[12], sigma = p[13], mu = p[14], gam = p[15]
    cdef double d0 = y1 + c0, d1 = y1 + c1, d2 = y1 + c2, d3 = y1 + c3, dh = y2 + h
    cdef double sq = y1 * y1
    cdef double d4 = sq + c4 * c4
    if d0 == 0.0 or d1 == 0.0 or d2 == 0.0 or d3 == 0.0 or dh == 0.0 or d4 == 0.0:
        return 1
    cdef double pred = bp * y2 * y3 / dh
    out[0] = H * c0 * y2 / d0 - delta * y1 * y2 / d2 - v * y1 * y3 / d3 - m * y1
    out[1] = (B * y1 / d1 - gam * y2) * y2 - pred - sigma * y2
    out[2] = xi * sq / d4 * pred - mu * y3
    return 0


def abm_solve(double alpha, double step, Py_ssize_t n_steps, y0, params):
    cdef cnp.ndarray[double, ndim=1] pv = np.ascontiguousarray(params, dtype=float)
    cdef cnp.ndarray[double, ndim=1] y0v = np.ascontiguousarray(y0, dtype=float)
    b_arr, c_arr, a0_arr = abm_weights(alpha, n_steps)
    cdef double[::1] b = b_arr
    cdef double[::1] c = c_arr
    cdef double[::1] a0 = a0_arr
    cdef cnp.ndarray[double, ndim=2] Y_arr = np.zeros((n_steps + 1, 3))
    cdef cnp.ndarray[double, ndim=2] F_arr = np.zeros((n_steps + 1, 3))
    cdef double[:, ::1] Y = Y_arr
    cdef double[:, ::1] F = F_arr
    cdef double hp = pow(step, alpha) / tgamma(alpha + 1.0)
    cdef double hc = pow(step, alpha) / tgamma(alpha + 2.0)
    cdef double s0, s1, s2, q0, q1, q2, w
    cdef double pr[3]
    cdef double fp[3]
    cdef double fo[3]
    cdef Py_ssize_t n, j, i
    cdef const double* p = &pv[0]
    for i in range(3):
        Y[0, i] = y0v[i]
    if _rhs(p, Y[0, 0], Y[0, 1], Y[0, 2], fo):
        return Y_arr, 0
    for i in range(3):
        F[0, i] = fo[i]
    with nogil:
        for n in range(n_steps):
            s0 = 0.0; s1 = 0.0; s2 = 0.0
            q0 = a0[n] * F[0, 0]; q1 = a0[n] * F[0, 1]; q2 = a0[n] * F[0, 2]
            for j in range(n + 1):
                w = b[n - j]
                s0 += w * F[j, 0]; s1 += w * F[j, 1]; s2 += w * F[j, 2]
            for j in range(1, n + 1):
                w = c[n - j]
                q0 += w * F[j, 0]; q1 += w * F[j, 1]; q2 += w * F[j, 2]
            pr[0] = y0v[0] + hp * s0
            pr[1] = y0v[1] + hp * s1
            pr[2] = y0v[2] + hp * s2
            if _rhs(p, pr[0], pr[1], pr[2], fp):
                with gil:
                    return Y_arr, n
            Y[n + 1, 0] = y0v[0] + hc * (fp[0] + q0)
            Y[n + 1, 1] = y0v[1] + hc * (fp[1] + q1)
            Y[n + 1, 2] = y0v[2] + hc * (fp[2] + q2)
            if not (isfinite(Y[n + 1, 0]) and isfinite(Y[n + 1, 1]) and isfinite(Y[n + 1, 2])):
                with gil:
                    return Y_arr, n
            if _rhs(p, Y[n + 1, 0], Y[n + 1, 1], Y[n + 1, 2], fo):
                with gil:
                    return Y_arr, n + 1
            if not (isfinite(fo[0]) and isfinite(fo[1]) and isfinite(fo[2])):
                with gil:
                    return Y_arr, n + 1
            F[n + 1, 0] = fo[0]; F[n + 1, 1] = fo[1]; F[n + 1, 2] = fo[2]
    return Y_arr, -1


# A direct double loop loses to np.convolve beyond a few hundred points, so the
# compiled module shares the NumPy implementation.
from fracplankton._kernels_py import history_convolve
