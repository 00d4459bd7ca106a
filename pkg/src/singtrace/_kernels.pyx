# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled summation kernels.

Every loop uses Neumaier compensated summation so that sums of 2^16 to 2^20
terms keep close to full double precision.  Signatures mirror
``singtrace._kernels_py`` exactly.
"""

from libc.math cimport exp, pow, fabs

import numpy as np


cdef inline void _acc(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def weighted_power_sum(const double[::1] mu, const double[::1] w, double s):
    """Sum of w_i * mu_i**s over entries with mu_i > 0."""
    cdef Py_ssize_t i, n = mu.shape[0]
    cdef double tot = 0.0, comp = 0.0
    with nogil:
        for i in range(n):
            if mu[i] > 0.0:
                _acc(w[i] * pow(mu[i], s), &tot, &comp)
    return tot + comp


def heat_sum(const double[::1] mu, const double[::1] w, double a):
    """Sum of w_i * exp(-a / mu_i**2) over entries with mu_i > 0."""
    cdef Py_ssize_t i, n = mu.shape[0]
    cdef double tot = 0.0, comp = 0.0, m
    with nogil:
        for i in range(n):
            m = mu[i]
            if m > 0.0:
                _acc(w[i] * exp(-a / (m * m)), &tot, &comp)
    return tot + comp


def exp_weighted_sum(const double[::1] t, const double[::1] c, double r):
    """Sum of c_i * exp(-t_i / r)."""
    cdef Py_ssize_t i, n = t.shape[0]
    cdef double tot = 0.0, comp = 0.0
    with nogil:
        for i in range(n):
            _acc(c[i] * exp(-t[i] / r), &tot, &comp)
    return tot + comp


def lattice_sum(double shift, double p, long K):
    """Sum over integers |k| <= K of (1 + (k - shift)**2) ** (-p/2)."""
    cdef long k
    cdef double tot = 0.0, comp = 0.0, x
    cdef double e = -0.5 * p
    with nogil:
        for k in range(-K, K + 1):
            x = k - shift
            _acc(pow(1.0 + x * x, e), &tot, &comp)
    return tot + comp
