"""Time the compiled kernels against their pure-Python fallbacks.

Usage::

    python benchmarks/bench_kernels.py [--sizes 20,50,100] [--repeat 3]

Each row reports the best-of-``repeat`` wall time per backend, the speedup,
and the largest eigenvalue difference between the two.
"""
import argparse
import sys
import timeit

import numpy as np

from radbound import _pycore

try:
    from radbound import _core
except ImportError:
    _core = None


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_jacobi(n, repeat, rng):
    b = rng.normal(size=(n, n))
    a = np.ascontiguousarray(b + b.T)
    t_py = best_time(lambda: _pycore.jacobi_eigh(a, want_vectors=False), repeat)
    t_c = best_time(lambda: _core.jacobi_eigh(a, want_vectors=False), repeat)
    w_py = np.sort(_pycore.jacobi_eigh(a, want_vectors=False)[0])
    w_c = np.sort(_core.jacobi_eigh(a, want_vectors=False)[0])
    return t_py, t_c, float(np.abs(w_py - w_c).max())


def bench_distance(n, repeat, rng):
    x = rng.normal(size=(n, 8))
    t_py = best_time(lambda: _pycore.min_sq_distance(x), repeat)
    t_c = best_time(lambda: _core.min_sq_distance(x), repeat)
    return t_py, t_c, abs(_pycore.min_sq_distance(x) - _core.min_sq_distance(x))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="20,50,100,200")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _core is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':<14}{'n':>6}{'python [s]':>13}{'compiled [s]':>14}{'speedup':>10}{'max diff':>11}")
    for name, fn, scale in (("jacobi_eigh", bench_jacobi, 1), ("min_sq_dist", bench_distance, 10)):
        for n in sizes:
            t_py, t_c, diff = fn(n * scale, args.repeat, rng)
            print(f"{name:<14}{n * scale:>6}{t_py:>13.4f}{t_c:>14.4f}{t_py / t_c:>10.1f}{diff:>11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
