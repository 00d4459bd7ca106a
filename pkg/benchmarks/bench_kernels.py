"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--size 1048576] [--repeat 5]

Prints one line per kernel with the best time of each backend, the speedup
and the relative difference of the results.  Without the compiled
extension only the fallback is timed.
"""

import argparse
import timeit

import numpy as np

from singtrace import _kernels_py

try:
    from singtrace import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None


def cases(size: int):
    n = np.arange(size, dtype=np.float64)
    mu = 1.0 / (n + 1.0)
    w = 2.0 + np.sin(n)
    t = np.log1p(n)
    c = np.ones(size)
    K = size // 2
    return {
        "weighted_power_sum": lambda m: m.weighted_power_sum(mu, w, 1.0 + 2.0**-8),
        "heat_sum": lambda m: m.heat_sum(mu, w, 1e-9),
        "exp_weighted_sum": lambda m: m.exp_weighted_sum(t, c, 3.0),
        "lattice_sum": lambda m: m.lattice_sum(0.25, 1.5, K),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=2**20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"size={args.size} repeat={args.repeat} compiled={'yes' if _compiled else 'no'}")
    print(f"{'kernel':<20} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'rel diff':>10}")
    for name, call in cases(args.size).items():
        t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat))
        v_py = call(_kernels_py)
        if _compiled is None:
            print(f"{name:<20} {1e3 * t_py:12.2f} {'-':>12} {'-':>8} {'-':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: call(_compiled), number=1, repeat=args.repeat))
        v_cy = call(_compiled)
        rel = abs(v_cy - v_py) / max(abs(v_py), 1e-300)
        print(f"{name:<20} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f} {rel:10.1e}")


if __name__ == "__main__":
    main()
