"""Timing comparison for the exponent-fit hot kernels: numba vs numpy.

Usage:
    python3 benchmarks/bench_fit.py [--sizes 200,600,2000] [--repeats 9]

The package selects the numba kernels at import when numba is importable
and BATHSPEC_NUMBA != 0, and otherwise falls back to the pure-numpy
implementations of the same three kernels (profiled objective, annealing
walk, golden-section polish).  Both flavours consume identical pre-drawn
uniform arrays, so this script can time them on the same inputs and also
report the worst output disagreement, which should be at floating-point
noise level.
"""

import argparse
import math
import statistics
import time

import numpy as np

from bathspec import _accel


def make_inputs(n, seed=1):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.9, 1.1, n)
    logx = np.log(x)
    logden = np.log((1.0 - x**2) ** 2 + (x / 215.0) ** 2)
    y = 2.0 * np.exp(-3.3 * logx - logden) * (1.0 + 0.05 * rng.standard_normal(n))
    u_prop = rng.random(200)
    u_acc = rng.random(200)
    return y, logx, logden, u_prop, u_acc


def time_call(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench_backend(label, profile, anneal, golden, inputs, repeats):
    y, logx, logden, u_prop, u_acc = inputs
    rows = {}
    ks = np.linspace(-5.5, 3.5, 100)

    def run_profile():
        for k in ks:
            profile(y, logx, logden, k, False)

    rows["profile x100"] = time_call(run_profile, repeats)
    rows["anneal walk (200 steps)"] = time_call(
        lambda: anneal(y, logx, logden, False, -5.0, 1.0, 0.95,
                       u_prop, u_acc, -6.0, 4.0),
        repeats,
    )
    rows["golden polish"] = time_call(
        lambda: golden(y, logx, logden, False, -3.5, -1.0, 1e-10), repeats
    )
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,600,2000",
                    help="comma-separated spectrum bin counts")
    ap.add_argument("--repeats", type=int, default=9,
                    help="timing repeats (median reported)")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    selected = _accel.backend_name()
    print(f"selected backend: {selected}")
    if selected != "numba":
        print("numba kernels unavailable (not importable, or disabled via "
              "BATHSPEC_NUMBA=0 / NUMBA_DISABLE_JIT=1); timing numpy only")

    for n in sizes:
        inputs = make_inputs(n)
        y, logx, logden, u_prop, u_acc = inputs
        print(f"\n-- {n} bins --")
        np_rows = bench_backend(
            "numpy", _accel._profile_np, _accel._anneal_np, _accel._golden_np,
            inputs, args.repeats,
        )
        if selected == "numba":
            # first calls trigger (cached) compilation; warm up before timing
            _accel._profile_nb(y, logx, logden, 1.0, False)
            _accel._anneal_nb(y, logx, logden, False, -5.0, 1.0, 0.95,
                              u_prop, u_acc, -6.0, 4.0)
            _accel._golden_nb(y, logx, logden, False, -3.5, -1.0, 1e-10)
            nb_rows = bench_backend(
                "numba", _accel._profile_nb, _accel._anneal_nb,
                _accel._golden_nb, inputs, args.repeats,
            )
            print(f"{'kernel':<26} {'numpy':>10} {'numba':>10} {'speedup':>8}")
            for key in np_rows:
                ratio = np_rows[key] / nb_rows[key]
                print(f"{key:<26} {np_rows[key] * 1e3:>9.3f}ms "
                      f"{nb_rows[key] * 1e3:>9.3f}ms {ratio:>7.1f}x")
            worst = 0.0
            for k in (-4.0, -2.3, 0.5, 2.0):
                a = _accel._profile_np(y, logx, logden, k, False)
                b = _accel._profile_nb(y, logx, logden, k, False)
                worst = max(worst, abs(a[0] - b[0]) / abs(a[0]),
                            abs(a[1] - b[1]) / abs(a[1]))
            print(f"worst profile disagreement: {worst:.2e} relative")
        else:
            print(f"{'kernel':<26} {'numpy':>10}")
            for key, val in np_rows.items():
                print(f"{key:<26} {val * 1e3:>9.3f}ms")


if __name__ == "__main__":
    main()
