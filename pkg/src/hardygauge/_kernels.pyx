# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the discrete Hardy operator (see ``_kernels_py``)."""
import numpy as np

from libc.math cimport pow


def hardy_apply(const double[::1] f, double head, const double[::1] cl,
                const double[::1] cr):
    cdef Py_ssize_t n = f.shape[0], i
    out = np.empty(n)
    cdef double[::1] F = out
    cdef double acc = head * f[0]
    F[0] = acc
    for i in range(1, n):
        acc += cl[i - 1] * f[i - 1] + cr[i - 1] * f[i]
        F[i] = acc
    return out


cdef void _adjoint(const double[::1] y, double head, const double[::1] cl,
                   const double[::1] cr, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0], j
    cdef double s_next = 0.0, s
    for j in range(n - 1, -1, -1):
        s = s_next + y[j]
        out[j] = 0.0
        if j + 1 < n:
            out[j] += cl[j] * s_next
        if j > 0:
            out[j] += cr[j - 1] * s
        s_next = s
    out[0] += head * s_next


def hardy_adjoint(const double[::1] y, double head, const double[::1] cl,
                  const double[::1] cr):
    out = np.empty(y.shape[0])
    cdef double[::1] o = out
    _adjoint(y, head, cl, cr, o)
    return out


def hardy_ratio_grad(const double[::1] f, double head, const double[::1] cl,
                     const double[::1] cr, const double[::1] dw,
                     const double[::1] dv, double p, double q):
    cdef Py_ssize_t n = f.shape[0], i
    y_arr = np.empty(n)
    grad = np.empty(n)
    cdef double[::1] y = y_arr
    cdef double[::1] g = grad
    cdef double acc = head * f[0], num = 0.0, den = 0.0, fq1, fp1, ratio
    cdef bint q2 = q == 2.0, p2 = p == 2.0, p1 = p == 1.0
    with nogil:
        for i in range(n):
            if i > 0:
                acc += cl[i - 1] * f[i - 1] + cr[i - 1] * f[i]
            if acc > 0.0:
                fq1 = acc if q2 else pow(acc, q - 1.0)
            else:
                fq1 = 0.0
            num += dw[i] * fq1 * acc
            y[i] = dw[i] * fq1
            if p1:
                fp1 = 1.0
            elif p2:
                fp1 = f[i]
            else:
                fp1 = pow(f[i], p - 1.0)
            den += dv[i] * fp1 * f[i]
            g[i] = dv[i] * fp1
    if num <= 0.0 or den <= 0.0:
        return 0.0, np.zeros(n)
    ratio = pow(num, 1.0 / q) / pow(den, 1.0 / p)
    cdef double[::1] gn = np.empty(n)
    with nogil:
        _adjoint(y, head, cl, cr, gn)
        for i in range(n):
            g[i] = ratio * (gn[i] / num - g[i] / den)
    return ratio, grad


def spectral_matvec(const double[::1] x, double head, const double[::1] cl,
                    const double[::1] cr, const double[::1] dw,
                    const double[::1] inv_sqrt_dv):
    cdef Py_ssize_t n = x.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double[::1] t = np.empty(n)
    cdef double acc = 0.0
    with nogil:
        for i in range(n):
            if i == 0:
                acc = head * inv_sqrt_dv[0] * x[0]
            else:
                acc += (cl[i - 1] * inv_sqrt_dv[i - 1] * x[i - 1]
                        + cr[i - 1] * inv_sqrt_dv[i] * x[i])
            t[i] = dw[i] * acc
        _adjoint(t, head, cl, cr, o)
        for i in range(n):
            o[i] *= inv_sqrt_dv[i]
    return out
