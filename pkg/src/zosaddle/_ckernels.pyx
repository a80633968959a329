# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-iteration hot path.

Mirrors :mod:`zosaddle._pykernels` function for function; the two are
checked against each other in the test suite.
"""
import numpy as np

from libc.math cimport exp, log, INFINITY

cdef double FLOOR = 1e-15


def entropy_prox(const double[::1] z, const double[::1] g, const Py_ssize_t[::1] bounds):
    """Multiplicative-weights step ``u ∝ z * exp(-g)`` on each simplex block."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t nb = bounds.shape[0] - 1
    cdef Py_ssize_t b, i, lo, hi
    cdef double zi, t, m, tot
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for b in range(nb):
        lo = bounds[b]
        hi = bounds[b + 1]
        m = -INFINITY
        for i in range(lo, hi):
            zi = z[i]
            if zi < FLOOR:
                zi = FLOOR
            t = log(zi) - g[i]
            out[i] = t
            if t > m:
                m = t
        tot = 0.0
        for i in range(lo, hi):
            t = exp(out[i] - m)
            out[i] = t
            tot += t
        for i in range(lo, hi):
            out[i] = out[i] / tot
    return out_arr


def project_simplex(const double[::1] v):
    """Euclidean projection of ``v`` onto the probability simplex (sort-based)."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t j
    cdef double cumsum = 0.0, theta = 0.0, t
    cdef double[::1] s = np.sort(np.asarray(v))[::-1].copy()
    for j in range(n):
        cumsum += s[j]
        t = (cumsum - 1.0) / (j + 1)
        if s[j] - t > 0:
            theta = t
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(n):
        t = v[j] - theta
        out[j] = t if t > 0 else 0.0
    return out_arr


def kl_divergence(const double[::1] a, const double[::1] b):
    """``sum a_i log(a_i / b_i)`` with the convention ``0 log 0 = 0``."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        if a[i] > 0:
            acc += a[i] * log(a[i] / b[i])
    return acc
