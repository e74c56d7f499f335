"""Benchmark the history weighted-sum kernel: compiled extension vs numpy.

The weighted sum over stored increments is the per-step hot spot of long
runs (cost grows linearly with the step count, so quadratically over a
run).  Run with:

    python benchmarks/bench_history.py [--nx 64] [--steps 100 500 2000]
"""

import argparse
import time

import numpy as np

from fracphase import _kernels_py

try:
    from fracphase import _kernels

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def bench(fn, coeffs, incs, out, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(coeffs, incs, out)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n", 1)[0])
    ap.add_argument("--nx", type=int, default=64, help="grid size per side")
    ap.add_argument(
        "--steps", type=int, nargs="+", default=[100, 500, 2000],
        help="history lengths to time",
    )
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"grid {args.nx}x{args.nx}, best of {args.repeats} runs")
    header = f"{'history':>8} {'numpy':>12}"
    if HAVE_COMPILED:
        header += f" {'compiled':>12} {'speedup':>8}"
    print(header)
    for n in args.steps:
        incs = np.ascontiguousarray(rng.standard_normal((n, args.nx, args.nx)))
        coeffs = np.ascontiguousarray(rng.standard_normal(n))
        out = np.empty((args.nx, args.nx))
        t_py = bench(_kernels_py.weighted_history_sum, coeffs, incs, out, args.repeats)
        ref = out.copy()
        line = f"{n:>8} {t_py * 1e3:>10.3f}ms"
        if HAVE_COMPILED:
            t_c = bench(_kernels.weighted_history_sum, coeffs, incs, out, args.repeats)
            if not np.allclose(out, ref, atol=1e-12):
                raise AssertionError("backends disagree")
            line += f" {t_c * 1e3:>10.3f}ms {t_py / t_c:>7.2f}x"
        print(line)
    if not HAVE_COMPILED:
        print("compiled extension not available; numpy fallback only")


if __name__ == "__main__":
    main()
