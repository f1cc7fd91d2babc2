# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled min-plus scans. Arithmetic mirrors the numpy fallback exactly:
diff = (i - j) * h;  obj = vals[j] + diff * diff * inv2lam.
The build disables FP contraction so both backends round identically."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY as INF

cnp.import_array()


def minplus_lines(const double[:, ::1] vals, double h, double inv2lam,
                  double[:, ::1] out):
    cdef Py_ssize_t lines = vals.shape[0]
    cdef Py_ssize_t n = vals.shape[1]
    cdef Py_ssize_t l, i, j
    cdef double best, diff, obj
    with nogil:
        for l in range(lines):
            for i in range(n):
                best = INF
                for j in range(n):
                    diff = (<double>(i - j)) * h
                    obj = vals[l, j] + diff * diff * inv2lam
                    if obj < best:
                        best = obj
                out[l, i] = best
    return None


def minconv_1d(const double[::1] f, const double[::1] g, long roff, double[::1] out):
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double best, obj
    with nogil:
        for i in range(n):
            best = INF
            for j in range(n):
                k = i - j + roff
                if k < 0 or k >= n:
                    continue
                obj = f[k] + g[j]
                if obj < best:
                    best = obj
            out[i] = best
    return None
