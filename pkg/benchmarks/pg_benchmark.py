"""Benchmark the compiled Polya-Gamma kernel against the pure-Python fallback.

Usage: python3 benchmarks/pg_benchmark.py [n_draws]
"""

import sys
import time

import numpy as np

from bibdr import _pg_python
from bibdr.pg import BACKEND, draw_pg_vector
from bibdr.rng import RngStream


def bench(label, fn, b, c, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(b, c)
        best = min(best, time.perf_counter() - t0)
    per = best / b.size
    print(f"  {label:<12} {best * 1e3:9.2f} ms total  {per * 1e9:9.1f} ns/draw")
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    print(f"active backend: {BACKEND}; {n} draws per case")
    for b_val, c_val in [(1, 0.0), (1, 2.0), (10, 1.0), (75, 3.0)]:
        b = np.full(n, b_val, dtype=np.int64)
        c = np.full(n, c_val)
        print(f"PG(b={b_val}, c={c_val}):")
        rng = RngStream(0, 1)
        t_active = bench(BACKEND, lambda b, c: draw_pg_vector(b, c, rng), b, c)
        gen = np.random.default_rng(1)
        t_py = bench("python", lambda b, c: _pg_python.draw_pg_vector(b, c, gen),
                     b, c)
        if BACKEND == "cython":
            print(f"  speedup: {t_py / t_active:.1f}x")


if __name__ == "__main__":
    main()
