#!/usr/bin/env python3
"""Timing comparison of the convolution kernel backends (compiled vs numpy)
on layer shapes taken from the benchmark grid, plus one full training step.

Run: python benchmarks/bench_backends.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from afresnet.data import generate_synthetic, preprocess
from afresnet.nn import backend
from afresnet.pipeline import TrainSpec, train

# (label, batch, cin, cout, length, kernel, stride)
SHAPES = [
    ("stem 1->8, L3000, K7/2", 32, 1, 8, 3000, 7, 2),
    ("narrow 8->4, L750, K3/2", 32, 8, 4, 750, 3, 2),
    ("mid 16->16, L94, K3/1", 32, 16, 16, 94, 3, 1),
    ("wide 64->64, L94, K3/1", 32, 64, 64, 94, 3, 1),
    ("wide 128->256, L24, K3/2", 32, 128, 256, 24, 3, 2),
]


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    print(f"{'shape':32} {'dir':8} {'numpy ms':>9} {'cython ms':>10} {'speedup':>8}")
    for label, b, cin, cout, length, kernel, stride in SHAPES:
        x = rng.normal(size=(b, cin, length))
        w = rng.normal(size=(cout, cin, kernel))
        padding = kernel // 2
        lout = (length + 2 * padding - kernel) // stride + 1
        go = rng.normal(size=(b, cout, lout))
        rows = {}
        for name in backend.available():
            backend.use(name)
            fwd = time_call(lambda: backend.conv1d_forward(x, w, stride, padding),
                            repeats)
            bwd = time_call(
                lambda: backend.conv1d_backward(x, w, go, stride, padding), repeats
            )
            rows[name] = (fwd, bwd)
        if "cython" not in rows:
            print(f"{label:32} compiled extension not built; numpy "
                  f"fwd {rows['numpy'][0]*1e3:.2f} ms")
            continue
        for direction, idx in (("forward", 0), ("backward", 1)):
            np_ms = rows["numpy"][idx] * 1e3
            cy_ms = rows["cython"][idx] * 1e3
            print(f"{label:32} {direction:8} {np_ms:9.3f} {cy_ms:10.3f} "
                  f"{np_ms / cy_ms:7.2f}x")


def bench_train_step():
    dataset = preprocess(generate_synthetic(32, 0.5, seed=0))
    spec = TrainSpec(config="8; cna; [4, 4, 8, 8, 16, 16, 20]; "
                            "[1, 1, 1, 1, 1, 1, 1]",
                     epochs=3, batch_size=32, seed=0)
    print("\nfull training run (3 epochs, 32 records, smallest grid config):")
    for name in backend.available():
        backend.use(name)
        started = time.perf_counter()
        train(spec, dataset, dataset)
        print(f"  {name:8} {time.perf_counter() - started:6.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"backends available: {', '.join(backend.available())}")
    bench_kernels(args.repeats)
    bench_train_step()


if __name__ == "__main__":
    main()
