# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np

from libc.math cimport exp, floor, log, log1p, INFINITY
from libc.stdlib cimport free, malloc

NAME = "cython"


cdef void _axis_logpmf(double lo, double hi, int n, double blo, double bhi,
                       double al, double be, double* lp, double* pm) noexcept nogil:
    cdef double h = (hi - lo) / n
    cdef double span = bhi - blo
    cdef double c, xn, v, s, lse
    cdef double mx = -INFINITY
    cdef int i, k, count = 0
    for i in range(n):
        c = lo + (i + 0.5) * h
        xn = (c - blo) / span
        if xn > 0.0 and xn < 1.0:
            v = (al - 1.0) * log(xn) + (be - 1.0) * log1p(-xn)
            lp[i] = v
            if v > mx:
                mx = v
            count += 1
        else:
            lp[i] = -INFINITY
    if count == 0:
        k = <int>floor((0.5 * (blo + bhi) - lo) / h)
        if k < 0:
            k = 0
        if k > n - 1:
            k = n - 1
        lp[k] = 0.0
        mx = 0.0
    s = 0.0
    for i in range(n):
        if lp[i] != -INFINITY:
            pm[i] = exp(lp[i] - mx)
            s += pm[i]
        else:
            pm[i] = 0.0
    lse = mx + log(s)
    for i in range(n):
        if lp[i] != -INFINITY:
            lp[i] -= lse
            pm[i] /= s


cdef double _kl_dir(const double* la, const double* pa, const double* lb, const double* pb,
                    const double* lc, const double* ld, int n, double eps) noexcept nogil:
    cdef double leps = log(eps)
    cdef double ncell = <double>n * <double>n
    cdef double nA = 0, nB = 0, nC = 0, nD = 0, nAC = 0, nBD = 0
    cdef double t_pp = 0, xa = 0, x_out = 0, x1 = 0, yb = 0, y_out = 0, y1 = 0
    cdef double lc_all = 0, ld_all = 0, lc_ac = 0, ld_bd = 0
    cdef double zp, zq, s1, s2
    cdef bint inA, inC
    cdef int i
    for i in range(n):
        inA = la[i] != -INFINITY
        inC = lc[i] != -INFINITY
        if inA:
            nA += 1
            t_pp += pa[i] * la[i]
            if inC:
                nAC += 1
                xa += pa[i]
                x1 += pa[i] * lc[i]
                lc_ac += lc[i]
            else:
                x_out += pa[i]
        if inC:
            nC += 1
            lc_all += lc[i]
    for i in range(n):
        inA = lb[i] != -INFINITY
        inC = ld[i] != -INFINITY
        if inA:
            nB += 1
            t_pp += pb[i] * lb[i]
            if inC:
                nBD += 1
                yb += pb[i]
                y1 += pb[i] * ld[i]
                ld_bd += ld[i]
            else:
                y_out += pb[i]
        if inC:
            nD += 1
            ld_all += ld[i]
    zp = (ncell - nA * nB) * eps
    zq = (ncell - nC * nD) * eps
    s1 = t_pp + zp * leps
    s2 = (x1 * yb + xa * y1 + leps * (x_out + xa * y_out)
          + eps * (lc_all * nD + nC * ld_all - lc_ac * nBD - nAC * ld_bd)
          + eps * leps * (ncell - nA * nB - nC * nD + nAC * nBD))
    return (s1 - s2) / (1.0 + zp) - log1p(zp) + log1p(zq)


cdef double _sym_kl(const double* a, const double* b, int n, double eps, double* buf) noexcept nogil:
    cdef double lo_x = a[0] if a[0] < b[0] else b[0]
    cdef double lo_y = a[1] if a[1] < b[1] else b[1]
    cdef double hi_x = a[2] if a[2] > b[2] else b[2]
    cdef double hi_y = a[3] if a[3] > b[3] else b[3]
    cdef double* lax = buf
    cdef double* pax = buf + n
    cdef double* lay = buf + 2 * n
    cdef double* pay = buf + 3 * n
    cdef double* lbx = buf + 4 * n
    cdef double* pbx = buf + 5 * n
    cdef double* lby = buf + 6 * n
    cdef double* pby = buf + 7 * n
    _axis_logpmf(lo_x, hi_x, n, a[0], a[2], a[4], a[5], lax, pax)
    _axis_logpmf(lo_y, hi_y, n, a[1], a[3], a[6], a[7], lay, pay)
    _axis_logpmf(lo_x, hi_x, n, b[0], b[2], b[4], b[5], lbx, pbx)
    _axis_logpmf(lo_y, hi_y, n, b[1], b[3], b[6], b[7], lby, pby)
    cdef double d1 = _kl_dir(lax, pax, lay, pay, lbx, lby, n, eps)
    cdef double d2 = _kl_dir(lbx, pbx, lby, pby, lax, lay, n, eps)
    return 0.5 * (d1 + d2)


def sym_kl_one_to_many(ref, others, int n, double eps):
    cdef double[::1] r = np.ascontiguousarray(ref, dtype=np.float64).reshape(8)
    cdef double[:, ::1] o = np.ascontiguousarray(others, dtype=np.float64).reshape(-1, 8)
    cdef Py_ssize_t m = o.shape[0], k
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double* buf = <double*>malloc(8 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(m):
                ov[k] = _sym_kl(&r[0], &o[k, 0], n, eps, buf)
    finally:
        free(buf)
    return out


def sym_kl_pairs(peds, pairs, int n, double eps):
    cdef double[:, ::1] p = np.ascontiguousarray(peds, dtype=np.float64).reshape(-1, 8)
    cdef long long[:, ::1] ij = np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2)
    cdef Py_ssize_t m = ij.shape[0], k
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    if m == 0:
        return out
    if np.asarray(ij).min() < 0 or np.asarray(ij).max() >= p.shape[0]:
        raise IndexError("pair index out of range")
    cdef double* buf = <double*>malloc(8 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(m):
                ov[k] = _sym_kl(&p[ij[k, 0], 0], &p[ij[k, 1], 0], n, eps, buf)
    finally:
        free(buf)
    return out


def overlap_pairs(boxes):
    cdef double[:, ::1] bx = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t nbox = bx.shape[0]
    order_arr = np.argsort(np.asarray(bx)[:, 0], kind="stable").astype(np.int64)
    cdef long long[::1] order = order_arr
    cdef Py_ssize_t a, c, i, j, count = 0, w = 0
    cdef double rb, bb, tb
    # first pass counts, second pass fills
    for a in range(nbox):
        i = order[a]
        rb = bx[i, 2]
        for c in range(a + 1, nbox):
            j = order[c]
            if bx[j, 0] >= rb:
                break
            bb = bx[i, 3] if bx[i, 3] < bx[j, 3] else bx[j, 3]
            tb = bx[i, 1] if bx[i, 1] > bx[j, 1] else bx[j, 1]
            if bb - tb > 0.0:
                count += 1
    out = np.empty((count, 2), dtype=np.int64)
    cdef long long[:, ::1] ov = out
    for a in range(nbox):
        i = order[a]
        rb = bx[i, 2]
        for c in range(a + 1, nbox):
            j = order[c]
            if bx[j, 0] >= rb:
                break
            bb = bx[i, 3] if bx[i, 3] < bx[j, 3] else bx[j, 3]
            tb = bx[i, 1] if bx[i, 1] > bx[j, 1] else bx[j, 1]
            if bb - tb > 0.0:
                if i < j:
                    ov[w, 0] = i
                    ov[w, 1] = j
                else:
                    ov[w, 0] = j
                    ov[w, 1] = i
                w += 1
    if count:
        out = out[np.lexsort((out[:, 1], out[:, 0]))]
    return out
