#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times active-set enumeration (the oracle's hot loop) and the elementwise
smoothed-root kernel used by every H/JH evaluation, and checks that both
backends agree.

    python benchmarks/bench_kernels.py [--reps 5] [--max-nodes 3]
"""

import argparse
import sys
import timeit

import numpy as np

from cdqvi import _kernels_py
from cdqvi.contact import random_instance

try:
    from cdqvi import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _best(fn, reps):
    return min(timeit.repeat(fn, number=1, repeat=reps))


def bench_enumeration(r, reps):
    inst = random_instance(r, 1.0, np.random.default_rng(r))
    args = (inst.D, inst.A, inst.G, inst.e, inst.c, 1e-9, 1e-12)
    py = _best(lambda: _kernels_py.enumerate_active_sets(*args), max(1, reps // 2))
    if _kernels_c is None:
        return py, None, None
    c = _best(lambda: _kernels_c.enumerate_active_sets(*args), reps)
    acc_py, sing_py = _kernels_py.enumerate_active_sets(*args)
    acc_c, sing_c = _kernels_c.enumerate_active_sets(*args)
    same = ([m for m, *_ in acc_py] == [m for m, *_ in acc_c] and sing_py == sing_c
            and all(np.allclose(a[1], b[1], atol=1e-10) for a, b in zip(acc_py, acc_c)))
    return py, c, same


def bench_roots(n, reps):
    rng = np.random.default_rng(n)
    lam, g = rng.standard_normal(n), rng.standard_normal(n)
    py = _best(lambda: _kernels_py.smoothed_root_terms(lam, g, 1e-4), reps)
    if _kernels_c is None:
        return py, None, None
    c = _best(lambda: _kernels_c.smoothed_root_terms(lam, g, 1e-4), reps)
    same = all(np.allclose(a, b, rtol=1e-14, atol=0)
               for a, b in zip(_kernels_py.smoothed_root_terms(lam, g, 1e-4),
                               _kernels_c.smoothed_root_terms(lam, g, 1e-4)))
    return py, c, same


def _row(label, py, c, same):
    if c is None:
        return f"{label:<28}{py * 1e3:>12.3f}{'n/a':>12}{'':>9}  compiled backend missing"
    return f"{label:<28}{py * 1e3:>12.3f}{c * 1e3:>12.3f}{py / c:>8.1f}x  agree={same}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--max-nodes", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"{'kernel':<28}{'python ms':>12}{'cython ms':>12}{'speedup':>9}")
    print("-" * 61)
    ok = True
    for r in range(1, args.max_nodes + 1):
        py, c, same = bench_enumeration(r, args.reps)
        print(_row(f"enumerate m={4 * r}", py, c, same))
        ok &= same is not False
    for n in (80, 800, 8000):
        py, c, same = bench_roots(n, args.reps)
        print(_row(f"smoothed_root_terms n={n}", py, c, same))
        ok &= same is not False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
