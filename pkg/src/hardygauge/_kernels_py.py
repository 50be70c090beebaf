"""Pure-numpy kernels for the discrete Hardy operator.

The operator maps node samples ``f`` to ``F_i`` = integral of ``f`` from the
window's lower edge up to node ``i``::

    F_0 = head * f_0
    F_i = F_{i-1} + cl[i-1] * f[i-1] + cr[i-1] * f[i]

``cl``/``cr`` are the left/right trapezoid coefficients of each cell between
consecutive nodes.  The compiled module ``_kernels`` implements the same
functions with identical signatures.
"""
import numpy as np


def hardy_apply(f, head, cl, cr):
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[0] = head * f[0]
    if f.size > 1:
        out[1:] = out[0] + np.cumsum(cl * f[:-1] + cr * f[1:])
    return out


def hardy_adjoint(y, head, cl, cr):
    y = np.asarray(y, dtype=float)
    tail = np.cumsum(y[::-1])[::-1]
    out = np.zeros_like(y)
    out[0] = head * tail[0]
    if y.size > 1:
        out[:-1] += cl * tail[1:]
        out[1:] += cr * tail[1:]
    return out


def hardy_ratio_grad(f, head, cl, cr, dw, dv, p, q):
    """Return ``(ratio, gradient)`` of (sum dw F^q)^(1/q) / (sum dv f^p)^(1/p)."""
    f = np.asarray(f, dtype=float)
    F = hardy_apply(f, head, cl, cr)
    pos = F > 0
    Fq1 = np.zeros_like(F)
    Fq1[pos] = F[pos] ** (q - 1.0)
    num = float(np.dot(dw, Fq1 * F))
    fp1 = np.ones_like(f) if p == 1.0 else f ** (p - 1.0)
    den = float(np.dot(dv, fp1 * f))
    if num <= 0.0 or den <= 0.0:
        return 0.0, np.zeros_like(f)
    ratio = num ** (1.0 / q) / den ** (1.0 / p)
    g_num = hardy_adjoint(dw * Fq1, head, cl, cr)
    grad = ratio * (g_num / num - dv * fp1 / den)
    return ratio, grad


def spectral_matvec(x, head, cl, cr, dw, inv_sqrt_dv):
    """Apply B^{-1/2} L^T diag(dw) L B^{-1/2} for the p = q = 2 eigenproblem."""
    z = inv_sqrt_dv * x
    Lz = hardy_apply(z, head, cl, cr)
    return inv_sqrt_dv * hardy_adjoint(dw * Lz, head, cl, cr)
