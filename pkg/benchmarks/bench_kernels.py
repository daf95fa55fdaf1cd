#!/usr/bin/env python3
"""Time the compiled and numpy subsection-scan kernels on identical inputs.

Usage: python benchmarks/bench_kernels.py [--sizes 50,200,800] [--rows 128] [--repeat 3]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from modescope import kernels
from modescope.statistics import scale_tables, subsection_spans


def _case(N: int, rows: int, seed: int):
    rng = np.random.default_rng(seed)
    A = np.empty((rows, N + 1))
    A[:, 0] = 0.0
    A[:, 1:N] = np.sort(rng.random((rows, N - 1)), axis=1)
    A[:, N] = 1.0
    scale, penalty = scale_tables(N, 10 * N)
    return A, scale, penalty


def bench(sizes, rows, repeat, seed=0):
    backends = sorted(kernels.BACKENDS)
    print(f"{'N':>6} {'spans':>8} " + " ".join(f"{b + ' [s]':>14}" for b in backends) + f" {'speedup':>9}")
    for N in sizes:
        A, scale, penalty = _case(N, rows, seed)
        spans = subsection_spans(N, 200)
        times, outs = {}, {}
        for b in backends:
            with kernels.use_backend(b):
                outs[b] = kernels.scan_max_rows(A, scale, penalty, spans)
                times[b] = min(timeit.repeat(lambda: kernels.scan_max_rows(A, scale, penalty, spans),
                                             number=1, repeat=repeat))
        if len(backends) > 1 and not np.array_equal(outs["compiled"], outs["python"]):
            raise SystemExit(f"backends disagree at N={N}")
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        label = "all" if spans is None else "ladder"
        print(f"{N:>6} {label:>8} " + " ".join(f"{times[b]:>14.4f}" for b in backends) + f" {speed:>9.1f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,200,800")
    ap.add_argument("--rows", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; timing the numpy backend only")
    bench([int(s) for s in args.sizes.split(",")], args.rows, args.repeat)


if __name__ == "__main__":
    main()
