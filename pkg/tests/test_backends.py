"""Statistical parity of the compiled kernels and the numpy fallback.

The two backends draw from their generators in different orders, so results
are compared in distribution (same laws, shared tolerances), not bitwise.
Each backend is individually deterministic for a fixed seed.
"""

import math

import numpy as np
import pytest

from thickpoints import analytic, geometry
from thickpoints._backend import BACKEND, get_kernels

kc = get_kernels("compiled")
kp = get_kernels("python")


def test_compiled_backend_active():
    assert BACKEND == "compiled"


def test_backend_determinism():
    for k in (kc, kp):
        a, _ = k.annulus_exit_batch(500, 0.3, 0.1, 1.0, 1.0, 1e-12, 0.1,
                                    10**6, np.random.default_rng(3))
        b, _ = k.annulus_exit_batch(500, 0.3, 0.1, 1.0, 1.0, 1e-12, 0.1,
                                    10**6, np.random.default_rng(3))
        assert np.array_equal(a, b)


def test_annulus_parity():
    u1, u2, u3 = math.exp(-2), math.exp(-1), 1.0
    exact = analytic.hitting_probability(u1, u2, u3)
    n = 4000
    floor = (1e-6 * u1) ** 2
    for k in (kc, kp):
        hit, budget = k.annulus_exit_batch(n, u2, u1, u3, 1.0, floor, 0.1,
                                           10**7, np.random.default_rng(5))
        assert budget == 0
        p = hit.mean()
        assert abs(p - exact) <= 3.0 * math.sqrt(exact * (1 - exact) / n) + 0.01


def test_occupation_parity():
    r1, r0 = 0.0736, 0.2
    alpha = r1
    eps = 2 * math.atan(alpha / 2)
    omega = geometry.spherical_cap_area(eps)
    means = {}
    for name, k in (("c", kc), ("p", kp)):
        occ, _ = k.tracked_occupation_batch(
            1500, r1, r0, np.array([0.0]), np.array([0.0]), np.array([alpha]),
            np.array([1], dtype=np.uint8), (alpha / 16.0) ** 2, 1e-18, 0.1,
            10**8, np.random.default_rng(6),
        )
        means[name] = occ[:, 0] / omega
    for v in means.values():
        se = v.std(ddof=1) / math.sqrt(len(v))
        assert abs(v.mean() - 1.0 / math.pi) <= 3.0 * se + 0.01


def test_concentric_parity():
    lad = geometry.build_ladder(0.2, 8)
    exact = analytic.excursion_count_tail(2, 5, 3)
    for k, n in ((kc, 6000), (kp, 1500)):
        counts, viol, budget = k.concentric_crossing_batch(
            n, lad.r[:6].copy(), 2, 1.0, 1e-18, 0.1, 10**7,
            np.random.default_rng(7))
        counts[:, :3] = 0
        assert budget == 0
        emp = np.mean(counts[:, 5] >= 3)
        assert abs(emp - exact) <= (
            3.0 * math.sqrt(exact * (1 - exact) / n) + 0.01
        )


def test_multi_center_replay_parity():
    # both backends must produce identical counts when replaying one path
    from thickpoints import brownian, excursions

    lad = geometry.build_ladder(0.2, 3)
    pts = geometry._fibonacci_points(40, cap=0.06)
    net = geometry.CoveringNet(3, 0.1, pts, geometry.pole_index_of(pts, lad))
    engine = excursions.SupremumEngine(lad, net, 3, r_star=0.09, dt_scale=0.1)
    cfg = brownian.PathConfig(domain=("cap", 0.09), dt_cap=engine.dt_cap,
                              seed=12)
    path = brownian.simulate_planar_path(cfg)
    (x0, y0, inv_cell, nx, ny, cell_start, items) = engine._grid
    out = {}
    for name, k in (("c", kc), ("p", kp)):
        counts, occ, viol, steps, reason = k.multi_center_excursions(
            engine.exit_radius, *engine._outer, *engine._inner,
            *engine._occ, x0, y0, inv_cell, nx, ny, cell_start, items,
            0.0, 0.0, 0, engine.dt_cap, 1e-18, 0.1, 10**8,
            np.random.default_rng(0), path.positions,
        )
        out[name] = counts
    assert np.array_equal(out["c"], out["p"])


def test_disk_exit_times_parity():
    for k, n in ((kc, 4000), (kp, 2000)):
        angles, times = k.disk_exit_angles_batch(
            n, 0.0, 0.0, 1.0, 1e-3, 1e-12, 0.1, 10**7,
            np.random.default_rng(8))
        se = times.std(ddof=1) / math.sqrt(n)
        assert abs(times.mean() - 0.5) <= 3.0 * se + 5e-3
