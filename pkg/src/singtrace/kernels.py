"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``SINGTRACE_PURE=1`` to force the fallback (used by the benchmark and by
the tests that compare both implementations).
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("SINGTRACE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled

        _impl = _compiled
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def weighted_power_sum(mu, w, s):
    mu = _f64(mu)
    w = np.ones_like(mu) if w is None else _f64(np.broadcast_to(w, mu.shape))
    return float(_impl.weighted_power_sum(mu, w, float(s)))


def heat_sum(mu, w, a):
    mu = _f64(mu)
    w = np.ones_like(mu) if w is None else _f64(np.broadcast_to(w, mu.shape))
    return float(_impl.heat_sum(mu, w, float(a)))


def exp_weighted_sum(t, c, r):
    t = _f64(t)
    return float(_impl.exp_weighted_sum(t, _f64(np.broadcast_to(c, t.shape)), float(r)))


def lattice_sum(shift, p, K):
    return float(_impl.lattice_sum(float(shift), float(p), int(K)))


def thread_cap() -> int:
    """Parallelism cap from ``SINGTRACE_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SINGTRACE_THREADS", "1")))
    except ValueError:
        return 1
