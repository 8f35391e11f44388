# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mode-wise propagation kernels (same contract as the NumPy backend)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double _W = 4.0 * 3.14159265358979323846 * 3.14159265358979323846


cdef inline double complex _phase(double x) noexcept nogil:
    return cos(x) + 1j * sin(x)


cdef inline double complex _weight(double ksq, double alpha, double delta) noexcept nogil:
    # integral of exp(i*w*s) over [alpha, alpha+delta), w = 4*pi^2*ksq;
    # half-angle form keeps short segments accurate
    cdef double w, wd, s_half, num_re, num_im
    cdef double complex ratio
    if ksq == 0.0:
        return delta
    w = _W * ksq
    wd = w * delta
    s_half = sin(0.5 * wd)
    num_re = -2.0 * s_half * s_half
    num_im = sin(wd)
    # (num_re + i*num_im) / (i*w) = (num_im - i*num_re) / w
    ratio = (num_im - 1j * num_re) / w
    return _phase(w * alpha) * ratio


def free_phase(const double[::1] ksq, double t):
    cdef Py_ssize_t n = ksq.shape[0]
    out_arr = np.empty(n, dtype=complex)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t j
    for j in range(n):
        out[j] = _phase(-_W * ksq[j] * t)
    return out_arr


def free_phase_many(const double[::1] ksq, const double[::1] ts):
    cdef Py_ssize_t n = ksq.shape[0], nt = ts.shape[0]
    out_arr = np.empty((nt, n), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(nt):
        for j in range(n):
            out[i, j] = _phase(-_W * ksq[j] * ts[i])
    return out_arr


def segment_transform(const double[::1] bp, const double complex[:, ::1] pieces,
                      const double[::1] ksq, double a, double b):
    cdef Py_ssize_t m = pieces.shape[0], n = ksq.shape[0]
    out_arr = np.zeros(n, dtype=complex)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double lo, hi
    cdef double complex wgt
    for i in range(m):
        lo = bp[i] if bp[i] > a else a
        hi = bp[i + 1] if bp[i + 1] < b else b
        if hi <= lo:
            continue
        for j in range(n):
            wgt = _weight(ksq[j], lo, hi - lo)
            out[j] = out[j] + pieces[i, j] * wgt
    return out_arr


def segment_transform_batch(const double[::1] bp, const double complex[:, ::1] pieces,
                            const double[::1] ksq, const double[:, ::1] bounds):
    cdef Py_ssize_t nb = bounds.shape[0], m = pieces.shape[0], n = ksq.shape[0]
    out_arr = np.zeros((nb, n), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t q, i, j
    cdef double a, b, lo, hi
    for q in range(nb):
        a = bounds[q, 0]
        b = bounds[q, 1]
        for i in range(m):
            lo = bp[i] if bp[i] > a else a
            hi = bp[i + 1] if bp[i + 1] < b else b
            if hi <= lo:
                continue
            for j in range(n):
                out[q, j] = out[q, j] + pieces[i, j] * _weight(ksq[j], lo, hi - lo)
    return out_arr


def prefix_transform_eval(const double[::1] bp, const double complex[:, ::1] pieces,
                          const double[::1] ksq, const double[::1] ts):
    cdef Py_ssize_t m = pieces.shape[0], n = ksq.shape[0], nt = ts.shape[0]
    cum_arr = np.zeros((m + 1, n), dtype=complex)
    cdef double complex[:, ::1] cum = cum_arr
    cdef Py_ssize_t i, j, p, lo_i, hi_i, mid
    cdef double t
    for i in range(m):
        for j in range(n):
            cum[i + 1, j] = cum[i, j] + pieces[i, j] * _weight(ksq[j], bp[i], bp[i + 1] - bp[i])
    out_arr = np.empty((nt, n), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    for i in range(nt):
        t = ts[i]
        # rightmost p with bp[p] <= t, clamped to the last piece
        lo_i = 0
        hi_i = m + 1
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) // 2
            if bp[mid] <= t:
                lo_i = mid
            else:
                hi_i = mid
        p = lo_i if lo_i < m else m - 1
        for j in range(n):
            out[i, j] = cum[p, j] + pieces[p, j] * _weight(ksq[j], bp[p], t - bp[p])
    return out_arr
