#!/usr/bin/env python3
"""Benchmark the compiled PAVA kernel against the pure-Python fallback.

The kernel is the hot inner loop of isotonic calibration, which dominates the
Monte Carlo and selection workloads. Run from the repo root:

    python3 benchmarks/bench_pava.py
"""
import time

import numpy as np

from ssmean._pava_py import pava as pava_py

try:
    from ssmean._pava import pava as pava_c
except ImportError:
    pava_c = None


def timeit(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_table():
    rng = np.random.default_rng(0)
    print(f"{'n':>8} {'pattern':>10} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for n in (100, 1_000, 10_000, 100_000):
        cases = {
            "random": rng.normal(size=n),
            "sorted": np.sort(rng.normal(size=n)),
            "reversed": -np.sort(rng.normal(size=n)),
        }
        w = np.ones(n)
        for name, y in cases.items():
            t_py = timeit(pava_py, y, w)
            if pava_c is None:
                print(f"{n:>8} {name:>10} {t_py * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>8}")
                continue
            t_c = timeit(pava_c, y, w)
            assert np.array_equal(pava_py(y, w), pava_c(y, w))
            print(
                f"{n:>8} {name:>10} {t_py * 1e3:>10.3f}ms {t_c * 1e3:>10.3f}ms "
                f"{t_py / t_c:>7.1f}x"
            )


def end_to_end():
    # one isotonic-calibrated estimate at the largest simulation cell
    from ssmean import estimate
    from ssmean.simulate import DgpSpec, draw_dataset

    design = draw_dataset(DgpSpec(n=1200, ratio=16, seed=0))
    t = timeit(lambda: estimate(design, "iso-cal"), repeats=3)
    print(f"\niso-cal estimate at n=1200, N=19200: {t * 1e3:.1f} ms per call")


if __name__ == "__main__":
    if pava_c is None:
        print("compiled kernel unavailable; showing pure-Python timings only\n")
    kernel_table()
    end_to_end()
