# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner kernels: trigonometric evaluation and monotone inversion."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs, floor, M_PI

cnp.import_array()


cdef inline double complex _horner(const double complex[::1] a, Py_ssize_t M,
                                   double t) noexcept nogil:
    cdef double complex w, s
    cdef double ang
    cdef Py_ssize_t j
    t = t - floor(t)
    ang = 2.0 * M_PI * t
    w = cos(ang) + 1j * sin(ang)
    s = a[2 * M]
    j = 2 * M - 1
    while j >= 0:
        s = s * w + a[j]
        j -= 1
    ang = -2.0 * M_PI * M * t
    return s * (cos(ang) + 1j * sin(ang))


def trig_eval(sym_coeffs, t):
    """Evaluate ``sum_m a_m exp(2 pi i m t)`` for ``m = -M..M``."""
    cdef const double complex[::1] a = np.ascontiguousarray(sym_coeffs, dtype=np.complex128)
    tt = np.asarray(t, dtype=np.float64)
    cdef const double[::1] ts = np.ascontiguousarray(tt.ravel())
    cdef Py_ssize_t M = (a.shape[0] - 1) // 2
    cdef Py_ssize_t k, nt = ts.shape[0]
    out = np.empty(nt, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for k in range(nt):
            o[k] = _horner(a, M, ts[k])
    return out.reshape(tt.shape)


def invert_monotone(sym_coeffs, d_coeffs, targets, lo, hi, double tol, int maxiter):
    """Safeguarded Newton for ``tau + p(tau) = y`` on each bracket ``[lo, hi]``."""
    cdef const double complex[::1] a = np.ascontiguousarray(sym_coeffs, dtype=np.complex128)
    cdef const double complex[::1] da = np.ascontiguousarray(d_coeffs, dtype=np.complex128)
    cdef const double[::1] y = np.ascontiguousarray(targets, dtype=np.float64)
    cdef const double[::1] l0 = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] h0 = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t M = (a.shape[0] - 1) // 2
    cdef Py_ssize_t k, n = y.shape[0]
    cdef int it
    cdef double x, f, df, lo_k, hi_k, step
    roots = np.empty(n, dtype=np.float64)
    conv = np.zeros(n, dtype=np.bool_)
    cdef double[::1] r = roots
    cdef cnp.npy_bool[::1] c = conv
    with nogil:
        for k in range(n):
            lo_k = l0[k]
            hi_k = h0[k]
            x = 0.5 * (lo_k + hi_k)
            for it in range(maxiter):
                f = x + _horner(a, M, x).real - y[k]
                if fabs(f) <= tol or (hi_k - lo_k <= 4e-16 and fabs(f) <= 100.0 * tol):
                    c[k] = 1
                    # one polishing step (size below tol/slope) takes the root to full precision
                    df = 1.0 + _horner(da, M, x).real
                    if df > 0.0:
                        x = x - f / df
                    break
                if f < 0.0:
                    lo_k = x
                else:
                    hi_k = x
                df = 1.0 + _horner(da, M, x).real
                step = x - f / df
                if not (step > lo_k and step < hi_k):
                    step = 0.5 * (lo_k + hi_k)
                x = step
            r[k] = x
    return roots, conv
