"""Benchmark of the compiled kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [--quick]
Workloads are sized so the fallback finishes in seconds; the compiled
backend is typically one to two orders of magnitude faster on the scalar
path loops and comparable on batch-vectorised ones.
"""

import argparse
import math
import time

import numpy as np

from thickpoints import geometry
from thickpoints._backend import get_kernels


def timed(fn, *args, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    scale = 0.2 if args.quick else 1.0
    kc = get_kernels("compiled")
    kp = get_kernels("python")
    lad = geometry.build_ladder(0.2, 6)
    rows = []

    n = int(4000 * scale)
    work = lambda k: k.annulus_exit_batch(
        n, math.exp(-1), math.exp(-2), 1.0, 1.0, 1e-16, 0.1, 10**7,
        np.random.default_rng(0))
    rows.append(("annulus_exit_batch", n, timed(work, kc), timed(work, kp)))

    n = int(2000 * scale)
    alpha = float(lad.r[1])
    work = lambda k: k.tracked_occupation_batch(
        n, float(lad.r[1]), float(lad.r[0]), np.array([0.0]),
        np.array([0.0]), np.array([alpha]), np.ones(1, dtype=np.uint8),
        (alpha / 16) ** 2, 1e-18, 0.1, 10**8, np.random.default_rng(1))
    rows.append(("tracked_occupation_batch", n, timed(work, kc),
                 timed(work, kp)))

    n = int(1000 * scale)
    work = lambda k: k.concentric_crossing_batch(
        n, lad.r[:5].copy(), 2, 1.0, 1e-18, 0.1, 10**7,
        np.random.default_rng(2))
    rows.append(("concentric_crossing_batch", n, timed(work, kc),
                 timed(work, kp)))

    n = int(20_000 * scale)
    work = lambda k: k.disk_exit_angles_batch(
        n, 0.3, 0.0, 1.0, 1e-3, 1e-12, 0.1, 10**7, np.random.default_rng(3))
    rows.append(("disk_exit_angles_batch", n, timed(work, kc),
                 timed(work, kp)))

    from thickpoints import brownian, excursions

    pts = geometry._fibonacci_points(300, cap=0.06)
    lad3 = geometry.build_ladder(0.2, 3)
    net = geometry.CoveringNet(3, 0.1, pts, geometry.pole_index_of(pts, lad3))
    engine = excursions.SupremumEngine(lad3, net, 3, r_star=0.09)
    grid = engine._grid

    def work(k):
        k.multi_center_excursions(
            engine.exit_radius, *engine._outer, *engine._inner, *engine._occ,
            *grid, 0.0, 0.0, 0, engine.dt_cap, 1e-18, 0.1, 10**8,
            np.random.default_rng(4), None)

    rows.append(("multi_center_excursions", 1, timed(work, kc),
                 timed(work, kp)))

    print(f"{'kernel':<28}{'size':>8}{'compiled':>12}{'fallback':>12}{'speedup':>9}")
    for name, n, tc, tp in rows:
        print(f"{name:<28}{n:>8}{tc:>11.3f}s{tp:>11.3f}s{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
