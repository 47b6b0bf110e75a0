# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Every function here has a numpy twin in ``_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _max(double x, double y) nogil:
    return x if x > y else y


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) nogil:
    # callers guarantee -n <= i < 2n (offsets are smaller than the period)
    if i >= n:
        return i - n
    if i < 0:
        return i + n
    return i


def pucci_1d(const double[::1] u, const long[::1] offsets,
             const double[::1] weights, double wpos, double wneg):
    cdef Py_ssize_t n = u.shape[0], m = offsets.shape[0]
    cdef Py_ssize_t i, k, o
    cdef double acc, d, ui
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for i in range(n):
            ui = u[i]
            acc = 0.0
            for k in range(m):
                o = offsets[k]
                d = u[_wrap(i + o, n)] + u[_wrap(i - o, n)] - 2.0 * ui
                acc = acc + weights[k] * ((wpos if d > 0 else wneg) * d)
            res[i] = acc
    return out


def pucci_2d(const double[:, ::1] u, const long[::1] off0, const long[::1] off1,
             const double[::1] weights, double wpos, double wneg):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], m = off0.shape[0]
    cdef Py_ssize_t i, j, k, a, b
    cdef double acc, d, uij
    out = np.empty((n0, n1), dtype=np.float64)
    cdef double[:, ::1] res = out
    with nogil:
        for i in range(n0):
            for j in range(n1):
                uij = u[i, j]
                acc = 0.0
                for k in range(m):
                    a = off0[k]
                    b = off1[k]
                    d = (u[_wrap(i + a, n0), _wrap(j + b, n1)]
                         + u[_wrap(i - a, n0), _wrap(j - b, n1)] - 2.0 * uij)
                    acc = acc + weights[k] * ((wpos if d > 0 else wneg) * d)
                res[i, j] = acc
    return out


def maxplus_rows(const double[:, ::1] a, const double[:, ::1] pen):
    # four independent running maxima; max is exactly associative
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t r, i, j, n4 = n - n % 4
    cdef double b0, b1, b2, b3
    out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] res = out
    with nogil:
        for r in range(m):
            for i in range(n):
                b0 = b1 = b2 = b3 = a[r, 0] - pen[i, 0]
                for j in range(0, n4, 4):
                    b0 = _max(b0, a[r, j] - pen[i, j])
                    b1 = _max(b1, a[r, j + 1] - pen[i, j + 1])
                    b2 = _max(b2, a[r, j + 2] - pen[i, j + 2])
                    b3 = _max(b3, a[r, j + 3] - pen[i, j + 3])
                for j in range(n4, n):
                    b0 = _max(b0, a[r, j] - pen[i, j])
                res[r, i] = _max(_max(b0, b1), _max(b2, b3))
    return out


# The max-type reductions divide once per offset: rounding is monotone, so
# max(v) / d equals max(v / d) exactly.


def pair_ratio_max_1d(const double[::1] u, const long[::1] offsets,
                      const double[::1] den):
    cdef Py_ssize_t n = u.shape[0], m = offsets.shape[0]
    cdef Py_ssize_t i, k, o
    cdef double best = 0.0, top, v
    with nogil:
        for k in range(m):
            o = offsets[k]
            top = 0.0
            for i in range(n):
                top = _max(top, fabs(u[_wrap(i + o, n)] - u[i]))
            v = top / den[k]
            if v > best:
                best = v
    return best


def pair_ratio_max_2d(const double[:, ::1] u, const long[::1] off0,
                      const long[::1] off1, const double[::1] den):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], m = off0.shape[0]
    cdef Py_ssize_t i, j, k, ip, b
    cdef double best = 0.0, top, v
    with nogil:
        for k in range(m):
            b = off1[k]
            top = 0.0
            for i in range(n0):
                ip = _wrap(i + off0[k], n0)
                for j in range(n1):
                    top = _max(top, fabs(u[ip, _wrap(j + b, n1)] - u[i, j]))
            v = top / den[k]
            if v > best:
                best = v
    return best


def neg_second_diff_max_1d(const double[::1] u, const long[::1] offsets,
                           const double[::1] den):
    cdef Py_ssize_t n = u.shape[0], m = offsets.shape[0]
    cdef Py_ssize_t i, k, o
    cdef double best = -1.0e300, top, v
    with nogil:
        for k in range(m):
            o = offsets[k]
            top = -1.0e300
            for i in range(n):
                v = -(u[_wrap(i + o, n)] + u[_wrap(i - o, n)] - 2.0 * u[i])
                top = _max(top, v)
            v = top / den[k]
            if v > best:
                best = v
    return best


def neg_second_diff_max_2d(const double[:, ::1] u, const long[::1] off0,
                           const long[::1] off1, const double[::1] den):
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], m = off0.shape[0]
    cdef Py_ssize_t i, j, k, a, b, ip, im
    cdef double best = -1.0e300, top, v
    with nogil:
        for k in range(m):
            a = off0[k]
            b = off1[k]
            top = -1.0e300
            for i in range(n0):
                ip = _wrap(i + a, n0)
                im = _wrap(i - a, n0)
                for j in range(n1):
                    v = -(u[ip, _wrap(j + b, n1)] + u[im, _wrap(j - b, n1)] - 2.0 * u[i, j])
                    top = _max(top, v)
            v = top / den[k]
            if v > best:
                best = v
    return best
