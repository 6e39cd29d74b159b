# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_core_py``.

Results must match the numpy reference bit for bit, so arithmetic is written
in the same order.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def ilhs_iterate(start, swaps):
    cdef double[:, ::1] values = np.array(start, dtype=np.float64, copy=True, order="C")
    cdef const double[:, :, ::1] sw = np.ascontiguousarray(swaps, dtype=np.float64)
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t k = values.shape[1]
    cdef Py_ssize_t steps = sw.shape[1]
    cdef cnp.int64_t[::1] perm = np.empty(k, dtype=np.int64)
    cdef Py_ssize_t row, s, q, last, j
    cdef cnp.int64_t tmp
    cdef double dk = <double>k
    for row in range(n):
        for s in range(steps):
            for q in range(k):
                perm[q] = q
            for q in range(k - 1):
                last = k - 1 - q
                j = <Py_ssize_t>(sw[row, s, q] * (last + 1))
                if j > last:
                    j = last
                tmp = perm[j]
                perm[j] = perm[last]
                perm[last] = tmp
            for q in range(k):
                values[row, q] = (perm[q] + values[row, q]) / dk
    return np.asarray(values)


cdef double _cdf_sorted(double u, double v, long k, long t) nogil:
    # unrolled recursion; bases are replayed innermost-first so the rounding
    # matches (base + inner) / denom of the reference implementation
    cdef double bases[64]
    cdef int depth = 0
    cdef double denom = <double>(k * (k - 1))
    cdef double ku, kv, i, j, fu, fv, result
    while True:
        if t == 0:
            result = u * v
            break
        ku = k * u
        kv = k * v
        i = floor(ku)
        j = floor(kv)
        fu = ku - i
        fv = kv - j
        if j > 0 and j == i:
            result = (ku * (kv - 1.0) - fu * (fv - 1.0)) / denom
            break
        if not (j > i):
            result = 0.0
            break
        bases[depth] = ku * (kv - 1.0) - fu * fv
        depth += 1
        if fu <= fv:
            u = fu
            v = fv
        else:
            u = fv
            v = fu
        t -= 1
    while depth > 0:
        depth -= 1
        result = (bases[depth] + result) / denom
    return result


def ilhs_cdf(u, v, k, t):
    ua = np.asarray(u, dtype=np.float64)
    va = np.asarray(v, dtype=np.float64)
    shape = np.broadcast(ua, va).shape
    cdef const double[::1] uf = np.ascontiguousarray(np.broadcast_to(ua, shape)).ravel()
    cdef const double[::1] vf = np.ascontiguousarray(np.broadcast_to(va, shape)).ravel()
    cdef Py_ssize_t n = uf.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t idx
    cdef long kk = k
    cdef long tt = t
    cdef double a, b
    if tt > 64:
        raise ValueError("t > 64 not supported")
    with nogil:
        for idx in range(n):
            a = uf[idx]
            b = vf[idx]
            if a <= b:
                o[idx] = _cdf_sorted(a, b, kk, tt)
            else:
                o[idx] = _cdf_sorted(b, a, kk, tt)
    return out.reshape(shape)


def cftp_mixture_window(ratio, u_blocks, cumw):
    cdef const double[::1] rt = np.ascontiguousarray(ratio, dtype=np.float64)
    cdef const double[:, ::1] ub = np.ascontiguousarray(u_blocks, dtype=np.float64)
    cdef const double[:, ::1] cw = np.ascontiguousarray(cumw, dtype=np.float64)
    cdef Py_ssize_t n = rt.shape[0]
    cdef Py_ssize_t rows = ub.shape[0]
    cdef Py_ssize_t r, i
    cdef double p_lo = 0.0, p_hi = 1.0, thr, u
    cdef long m_lo = 0, m_hi = 0
    cdef int z_lo, z_hi
    cdef bint z_equal = True
    for r in range(rows):
        m_lo = 0
        m_hi = 0
        z_equal = True
        for i in range(n):
            u = ub[r, i]
            if p_lo >= 1.0:
                z_lo = 0
            elif p_lo <= 0.0:
                z_lo = 1
            else:
                thr = p_lo / (p_lo + (1.0 - p_lo) * rt[i])
                z_lo = 1 if u > thr else 0
            if p_hi >= 1.0:
                z_hi = 0
            elif p_hi <= 0.0:
                z_hi = 1
            else:
                thr = p_hi / (p_hi + (1.0 - p_hi) * rt[i])
                z_hi = 1 if u > thr else 0
            if z_lo == 0:
                m_lo += 1
            if z_hi == 0:
                m_hi += 1
            if z_lo != z_hi:
                z_equal = False
        p_lo = cw[r, m_lo] / cw[r, n + 1]
        p_hi = cw[r, m_hi] / cw[r, n + 1]
    return p_lo, p_hi, m_lo, m_hi, bool(z_equal)
