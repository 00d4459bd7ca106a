"""Pure-Python reference kernels (numpy for the terms, ``math.fsum`` for the sums).

Used when the compiled extension is unavailable or ``SINGTRACE_PURE=1``.
"""

import math

import numpy as np


def weighted_power_sum(mu, w, s):
    mu = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    keep = mu > 0.0
    return math.fsum(w[keep] * mu[keep] ** s)


def heat_sum(mu, w, a):
    mu = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    keep = mu > 0.0
    with np.errstate(under="ignore"):
        return math.fsum(w[keep] * np.exp(-a / mu[keep] ** 2))


def exp_weighted_sum(t, c, r):
    t = np.asarray(t, dtype=float)
    c = np.asarray(c, dtype=float)
    with np.errstate(under="ignore"):
        return math.fsum(c * np.exp(-t / r))


def lattice_sum(shift, p, K):
    k = np.arange(-int(K), int(K) + 1, dtype=float) - shift
    return math.fsum((1.0 + k * k) ** (-0.5 * p))
