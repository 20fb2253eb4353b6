"""Benchmark the hot kernels: compiled extension vs numpy reference.

Sizes mirror one 20 Hz tick of the corridor scenario (360-beam scans,
172x76 grid, 500 particles x 45 decimated beams).

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from fetchbot.kernels import available_backends


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_inputs():
    rng = np.random.default_rng(11)
    segments = rng.uniform(0, 8, (12, 4))
    discs = np.column_stack([rng.uniform(0, 8, (3, 2)), rng.uniform(0.1, 0.3, 3)])
    angles = np.linspace(-2.36, 2.36, 360)

    grid = np.zeros((76, 172))
    ex = rng.uniform(0, 172, 360)
    ey = rng.uniform(0, 76, 360)
    hit = rng.random(360) > 0.2

    occ = rng.random((76, 172)) < 0.05

    particles = np.column_stack([rng.uniform(0, 8, 500), rng.uniform(0, 3, 500),
                                 rng.uniform(-3, 3, 500)])
    field = np.abs(rng.normal(0, 1, (76, 172)))
    rel = np.linspace(-2.3, 2.3, 45)
    ranges = rng.uniform(0.3, 9.5, 45)

    return {
        "raycast (360 beams, 12 segs, 3 discs)": lambda k: k.raycast(
            4.0, 1.6, angles, segments, discs, 10.0),
        "integrate_scan (360 beams, 172x76)": lambda k: k.integrate_scan_grid(
            grid.copy(), 80.0, 38.0, ex, ey, hit, -0.4, 0.85, -4.0, 4.0),
        "edt_sq (172x76)": lambda k: k.edt_sq(occ),
        "likelihood (500 particles x 45 beams)": lambda k: k.likelihood_logsum(
            particles[:, 0], particles[:, 1], particles[:, 2], rel, ranges,
            field, -0.3, -0.3, 0.05, 0.1, 1.0, 0.5),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = available_backends()
    cases = make_inputs()
    print(f"backends: {', '.join(backends)}   (best of {args.repeats} runs)\n")
    header = f"{'kernel':44s}" + "".join(f"{name:>14s}" for name in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10s}"
    print(header)
    print("-" * len(header))
    for label, call in cases.items():
        times = {name: time_call(lambda m=mod: call(m), args.repeats)
                 for name, mod in backends.items()}
        row = f"{label:44s}" + "".join(f"{times[name] * 1e6:>11.0f} us" for name in backends)
        if "native" in times and "reference" in times:
            row += f"{times['reference'] / times['native']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
