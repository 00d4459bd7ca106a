"""Quadrature and Euler-Maclaurin machinery for slowly decaying sums.

Integrals over (1, inf) are taken in the logarithmic variable ``y = ln x`` so
the integrand becomes ``g(y) = f(e^y) e^y``.  Up to ``y = LOG_FLOAT_MAX`` the
integrand is evaluated in doubles with adaptive Gauss-Legendre panels; beyond
that point ``e^y`` overflows and the integrand is evaluated with mpmath on
fixed geometric panels, where every integrand produced by the model grammar
is slowly varying.
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

from .expr import Expression

LOG_FLOAT_MAX = 690.0
MP_DPS = 25

# Bernoulli-number weights for the Euler-Maclaurin endpoint correction:
# sum_{n=a}^{b-1} f(n) = int_a^b f + E(a) - E(b),
# E(x) = f/2 - f'/12 + f'''/720 - f^(5)/30240.
_EM_COEFFS = ((0, 0.5), (1, -1.0 / 12.0), (3, 1.0 / 720.0), (5, -1.0 / 30240.0))


@lru_cache(maxsize=8)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _gl(func, a: float, b: float, n: int = 16) -> float:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, func(half * x + 0.5 * (a + b))))


def adaptive_gl(func, a: float, b: float, rel: float = 1e-14, abs_tol: float = 0.0, max_depth: int = 40,
                max_splits: int = 4000) -> float:
    """Adaptive Gauss-Legendre on [a, b] for a vectorised integrand.

    A panel is accepted when its error estimate is below ``rel`` times its own
    share of int |f| (or ``abs_tol``), so panels where f cancels to nearly
    zero do not force endless bisection.  Rounding noise in f can still keep
    the estimate above any relative target; after ``max_splits`` bisections
    the remaining panels are accepted as they stand.
    """
    if b == a:
        return 0.0
    scale = abs(_gl(lambda x: np.abs(func(x)), a, b)) / abs(b - a)
    pieces = []
    stack = [(a, b, _gl(func, a, b), max_depth)]
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl(func, lo, mid), _gl(func, mid, hi)
        both = left + right
        if abs(both - whole) <= max(rel * abs(both), rel * scale * abs(hi - lo), abs_tol) or depth == 0 or max_splits <= 0:
            pieces.append(both)
        else:
            max_splits -= 1
            stack.append((lo, mid, left, depth - 1))
            stack.append((mid, hi, right, depth - 1))
    return math.fsum(pieces)


def log_panels(a: float, b: float, ratio: float = 1.1, unit: float = 1.0) -> np.ndarray:
    """Breakpoints on [a, b]: unit width while |y| is small, geometric beyond."""
    pts = [a]
    y = a
    while y < b:
        step = max(unit, (ratio - 1.0) * abs(y))
        y = min(b, y + step)
        pts.append(y)
    return np.asarray(pts)


def log_integrand(f: Expression):
    """Return ``g(y) = f(e^y) e^y`` as a vectorised function with mpmath fallback."""

    def g(y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        small = y <= LOG_FLOAT_MAX
        if small.any():
            x = np.exp(y[small])
            with np.errstate(all="ignore"):
                out[small] = f(x) * x
        redo = ~small | ~np.isfinite(out)
        if redo.any():
            with mpmath.workdps(MP_DPS):
                for idx in np.flatnonzero(redo):
                    x = mpmath.exp(mpmath.mpf(float(y[idx])))
                    out[idx] = float(f.mp(x) * x)
        return out

    return g


def _mp_panel_sum(g, a: float, b: float, ratio: float = 1.15, nodes: int = 20) -> float:
    pts = log_panels(a, b, ratio=ratio, unit=1.0)
    return math.fsum(_gl(g, lo, hi, nodes) for lo, hi in zip(pts[:-1], pts[1:]))


def integrate_log(f: Expression, y0: float, y1: float, rel: float = 1e-14) -> float:
    """Integral of f over x in [e^y0, e^y1], computed in the variable y."""
    if y1 <= y0:
        return 0.0
    g = log_integrand(f)
    total = []
    lo = y0
    hi = min(y1, LOG_FLOAT_MAX)
    if hi > lo:
        pts = log_panels(lo, hi)
        coarse = sum(_gl(g, p, q) for p, q in zip(pts[:-1], pts[1:]))
        floor = 1e-17 * abs(coarse)
        total.extend(adaptive_gl(g, p, q, rel=rel, abs_tol=floor) for p, q in zip(pts[:-1], pts[1:]))
    if y1 > LOG_FLOAT_MAX:
        total.append(_mp_panel_sum(g, max(y0, LOG_FLOAT_MAX), y1))
    return math.fsum(total)


def cumulative_log_integral(f: Expression, ys: np.ndarray) -> np.ndarray:
    """``out[i] = int_{e^ys[0]}^{e^ys[i]} f(x) dx`` for a nondecreasing ``ys``."""
    ys = np.asarray(ys, dtype=float)
    out = np.zeros_like(ys)
    g = log_integrand(f)
    acc = 0.0
    for i in range(1, len(ys)):
        lo, hi = ys[i - 1], ys[i]
        if hi > lo:
            if hi <= LOG_FLOAT_MAX:
                acc += adaptive_gl(g, lo, hi, rel=1e-14, abs_tol=1e-18 * max(abs(acc), 1e-300))
            elif lo >= LOG_FLOAT_MAX:
                acc += _mp_panel_sum(g, lo, hi, ratio=1.05)
            else:
                acc += adaptive_gl(g, lo, LOG_FLOAT_MAX, rel=1e-14) + _mp_panel_sum(g, LOG_FLOAT_MAX, hi, ratio=1.05)
        out[i] = acc
    return out


def eval_at_log(f: Expression, y: float) -> float:
    """f(e^y) for any real y (mpmath when e^y or an intermediate overflows)."""
    if y <= LOG_FLOAT_MAX:
        val = float(f(math.exp(y)))
        if math.isfinite(val):
            return val
    with mpmath.workdps(MP_DPS):
        return float(f.mp(mpmath.exp(mpmath.mpf(y))))


def log_eval_at_log(f: Expression, y: float) -> float:
    """ln f(e^y) for positive f, robust to underflow of f itself."""
    if y <= LOG_FLOAT_MAX:
        val = float(f(math.exp(y)))
        if math.isfinite(val) and val > 1e-290:
            return math.log(val)
    with mpmath.workdps(MP_DPS):
        v = f.mp(mpmath.exp(mpmath.mpf(y)))
        if v <= 0:
            return -math.inf
        return float(mpmath.log(v))


def em_endpoint(f: Expression, x: float | None = None, log_x: float | None = None) -> float:
    """The Euler-Maclaurin endpoint term E(x) (see module constants)."""
    if log_x is None:
        log_x = math.log(x)
    terms = []
    for order, coeff in _EM_COEFFS:
        d = f.derivative(order)
        val = float(d(float(x))) if x is not None else math.nan
        if not math.isfinite(val):
            val = eval_at_log(d, log_x)
        terms.append(coeff * val)
    return math.fsum(terms)


def em_tail(f: Expression, a: int, y_end: float) -> float:
    """sum_{n >= a} f(n), assuming f and its derivatives are negligible beyond e^y_end."""
    return integrate_log(f, math.log(a), y_end) + em_endpoint(f, float(a))


def em_partial(f: Expression, a: int, log_bs: np.ndarray) -> np.ndarray:
    """sum_{a <= n < b} f(n) for each ``b = e^{log_bs}`` (sorted, all >= a)."""
    log_bs = np.asarray(log_bs, dtype=float)
    ys = np.concatenate([[math.log(a)], log_bs])
    integ = cumulative_log_integral(f, ys)[1:]
    ea = em_endpoint(f, float(a))
    eb = np.array([em_endpoint(f, log_x=float(lb)) for lb in log_bs])
    return integ + ea - eb
