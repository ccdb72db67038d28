#!/usr/bin/env python3
"""Compare the compiled kernels with the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py            # default sizes
    python3 benchmarks/bench_kernels.py --repeat 9

Workloads mirror how the simulator actually calls each kernel: the raycast
fires 360 beams into a medium-sized world at 10 Hz, the quadrature decoder
eats large batches only during fast spins, and edge generation runs at
1 kHz on tiny angle deltas (so per-call overhead dominates it).
"""

import argparse
import math
import statistics
import time

import numpy as np

from mirsim._kernels import _pure

try:
    from mirsim._kernels import _native
except ImportError:
    _native = None


def timeit(fn, *, repeat, inner):
    """Median seconds for one call of fn, with warmup."""
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        samples.append((time.perf_counter() - t0) / inner)
    return statistics.median(samples)


def make_world(rng, nseg):
    centers = rng.uniform(-8.0, 8.0, size=(nseg, 2))
    offsets = rng.uniform(-1.5, 1.5, size=(nseg, 2))
    return np.ascontiguousarray(
        np.hstack([centers, centers + offsets]), dtype=np.float64
    )


def bench_raycast(mod, segs, *, repeat):
    return timeit(
        lambda: mod.raycast_scan(0.3, -0.2, 0.7, 360, 5.0, segs),
        repeat=repeat,
        inner=20,
    )


def bench_quad(mod, states, *, repeat):
    return timeit(
        lambda: mod.quad_decode_batch(0, states),
        repeat=repeat,
        inner=5,
    )


def bench_edges(mod, *, repeat):
    # 1 kHz call pattern: ~0.0056 rad per tick at full speed (600 ppr shaft).
    def run():
        a = 0.0
        for _ in range(1000):
            mod.encoder_edge_states(a, a + 0.0056, 600)
            a += 0.0056

    return timeit(run, repeat=repeat, inner=1)


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    return f"{seconds * 1e3:8.2f} ms"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (median wins)")
    parser.add_argument("--segments", type=int, default=120, help="world size for the raycast")
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    segs = make_world(rng, args.segments)
    states = np.tile(np.array([1, 3, 2, 0], dtype=np.uint8), 250_000)

    rows = [
        ("raycast 360 beams", lambda m: bench_raycast(m, segs, repeat=args.repeat)),
        ("quad decode 1M states", lambda m: bench_quad(m, states, repeat=args.repeat)),
        ("edge gen 1k calls", lambda m: bench_edges(m, repeat=args.repeat)),
    ]

    print(f"{'kernel':<24} {'pure':>12} {'native':>12} {'speedup':>9}")
    for name, bench in rows:
        pure_t = bench(_pure)
        if _native is None:
            print(f"{name:<24} {fmt(pure_t):>12} {'(not built)':>12}")
            continue
        native_t = bench(_native)
        print(f"{name:<24} {fmt(pure_t):>12} {fmt(native_t):>12} {pure_t / native_t:>8.1f}x")

    if _native is None:
        print("\ncompiled extension not importable; fallback timings only")


if __name__ == "__main__":
    main()
