"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every experiment runs at its stated scale with its stated tolerance through
the same harness code the CLI uses; master seeds are pinned so the suite is
deterministic.  Run with `pytest -m acceptance -s` to watch the lines.
"""

import math

import numpy as np
import pytest

from thickpoints import analytic, brownian, excursions, galton_watson, geometry
from thickpoints.harness.config import load_config
from thickpoints.harness.experiments import run_experiment
from thickpoints.harness.fits import tail_fit

pytestmark = pytest.mark.acceptance

SEED = 20260401


def _report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:2d} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def _cfg(kind, *pairs):
    return load_config(None, [("kind", kind), ("seed", SEED), *pairs])


def test_criterion_01_hitting_law():
    cfg = _cfg("oracle-check", ("extra", {"paths": 100_000}))
    records, _ = run_experiment(cfg)
    worst = 0.0
    ok = True
    for rec in records:
        p, exact, n = rec.estimate, rec.envelope, rec.params["paths"]
        margin = 3.0 * math.sqrt(exact * (1 - exact) / n) + 0.01
        worst = max(worst, abs(p - exact) / margin)
        ok = ok and abs(p - exact) <= margin
    _report(1, "hitting law", ok,
            f"5 triples at 1e5 paths, worst |diff|/margin = {worst:.2f}")


def test_criterion_02_excursion_tail_law():
    lad = geometry.build_ladder(0.2, 8)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    ok = True
    for k, l in ((1, 3), (2, 5), (3, 8)):
        counts = brownian.radial_excursion_chain(k, lad, l, rng,
                                                 n_chains=1_000_000)
        T = counts[:, l]
        for n in range(1, 31):
            p = analytic.excursion_count_tail(k, l, n)
            emp = float(np.mean(T >= n))
            z = abs(emp - p) / math.sqrt(p * (1 - p) / len(T))
            worst = max(worst, z)
            ok = ok and z <= 3.0
    _report(2, "excursion tail law", ok,
            f"(k,l) in {{(1,3),(2,5),(3,8)}}, n<=30 at 1e6 chains, "
            f"worst bin z = {worst:.2f}")


def test_criterion_03_gw_bridge():
    cfg = _cfg("gw-bridge", ("extra", {"samples": 1_000_000,
                                       "parents_max": 10}))
    records, _ = run_experiment(cfg)
    worst = max(rec.estimate for rec in records)
    ok = worst <= 0.01
    _report(3, "GW bridge", ok,
            f"parents 1..10 at 1e6 samples, worst TV = {worst:.4f}")


def test_criterion_04_mean_occupation():
    cfg = _cfg("occupation", ("ladder", {"r0": 0.2, "L": 3}),
               ("extra", {"k": 1, "excursions": 10_000,
                          "quad_samples": 400_000}))
    records, _ = run_experiment(cfg)
    ok = True
    details = []
    c_fit = records[0].fitted_constant
    for rec in records:
        lo, hi = rec.ci
        se = (hi - lo) / (2 * 1.96)
        z = (rec.estimate - 1.0 / math.pi) / se
        ok = ok and abs(z) <= 3.0
        second = rec.extra["second_moment"]
        quad = rec.extra["kac_quadrature"]
        tol = 3.0 * (rec.extra["second_moment_stderr"]
                     + rec.extra["kac_stderr"]) + 0.02 * quad
        ok = ok and abs(second - quad) <= tol
        ok = ok and second <= c_fit * rec.extra["envelope_unit"] * (1 + 1e-9)
        ok = ok and quad <= c_fit * rec.extra["envelope_unit"] * (1 + 0.05)
        details.append(f"z={z:+.2f}")
    _report(4, "mean occupation 1/pi", ok,
            f"eps in {{h_k, h_k/10, h_k/100}} at 1e4 excursions: "
            f"{', '.join(details)}; envelope c^2 = {c_fit:.3f}")


def test_criterion_05_gw_tail_lemma():
    cfg = _cfg("gw-tail", ("extra", {"n0_max": 200, "l_max": 20}))
    records, _ = run_experiment(cfg)
    rec = records[0]
    calib = rec.fitted_constant
    verify = rec.extra["verify_max_ratio"]
    ok = (rec.extra["lost_mass"] < 1e-12 and math.isfinite(calib)
          and verify <= 1.1 * calib and calib < 10.0)
    _report(5, "GW tail lemma", ok,
            f"single c = {calib:.3f} over n0 in 2..200, l <= 20 "
            f"(held-out worst ratio {verify:.3f}, "
            f"truncation loss {rec.extra['lost_mass']:.1e})")


def test_criterion_06_barrier_theorem_shapes():
    cfg = _cfg("gw-envelope", ("extra", {"L_values": [16, 32, 64]}))
    records, _ = run_experiment(cfg)
    uppers = {r.params["L"]: r.fitted_constant for r in records
              if r.params.get("side") == "upper"}
    lowers = {r.params["L"]: r.fitted_constant for r in records
              if r.params.get("side") == "lower"}
    slope_rec = next(r for r in records if r.params.get("side") == "slope")
    c_up = max(uppers.values())
    c_lo = min(lowers.values())
    ok = (0.0 < c_lo <= c_up < math.inf and c_up / c_lo < 20.0
          and abs(slope_rec.estimate + 1.0) <= 0.1)
    _report(6, "barrier theorem shapes", ok,
            f"L in {{16,32,64}}: sandwich constants c_lo={c_lo:.4f} "
            f"c_up={c_up:.4f} (ratio {c_up / c_lo:.1f}); "
            f"Gaussian-factor slope at L=64: {slope_rec.estimate:.3f}")


@pytest.mark.slow
def test_criterion_07_supremum_excursion_tail():
    cfg = _cfg("thick-tail",
               ("ladder", {"r0": 0.1, "L": 5}),
               ("net", {"d0": 0.1, "level": 5, "subsample": 600_000}),
               ("path", {"dt_scale": 0.2}),
               ("replicas", 2000),
               ("z_grid", [1.0, 1.5, 2.0, 2.5, 3.0]))
    records, lines = run_experiment(cfg)
    fit = next((r for r in records if r.params.get("summary") == "fit"), None)
    ok = fit is not None and abs(fit.estimate + 2.0) <= 0.5
    detail = "no tail events" if fit is None else (
        f"2000 replicas, slope = {fit.estimate:.3f} "
        f"(se {fit.extra['slope_stderr']:.3f}), multiplier 1+z"
    )
    _report(7, "supremum excursion tail", ok, detail)


def test_criterion_08_occupation_deviations():
    cfg = _cfg("deviation", ("ladder", {"r0": 0.2, "L": 3}),
               ("extra", {"k": 2, "delta": 0.3,
                          "batch_sizes": [50, 100, 200], "batches": 10_000}))
    records, _ = run_experiment(cfg)
    ps = [rec.estimate for rec in records]
    ns = [rec.params["n"] for rec in records]
    monotone = all(a > b for a, b in zip(ps, ps[1:]))
    slope = float(np.polyfit(ns, np.log(ps), 1)[0])
    ok = monotone and slope < 0
    _report(8, "occupation deviations", ok,
            f"delta=0.3, n in {{50,100,200}} at 1e4 batches: "
            f"p = {', '.join(f'{p:.2e}' for p in ps)} "
            f"(log-slope {slope:.4f}/excursion)")


def test_criterion_09_wasserstein_concentration():
    cfg = _cfg("wasserstein", ("extra", {"replicas_per_n": 2000}))
    records, _ = run_experiment(cfg)
    c0 = records[0].fitted_constant
    ok = True
    worst = 0.0
    for rec in records:
        n = rec.params["n"]
        allow = rec.envelope + 3.0 * math.sqrt(
            rec.envelope * (1 - min(rec.envelope, 1.0)) / 2000.0
        )
        worst = max(worst, rec.estimate - rec.envelope)
        ok = ok and rec.estimate <= allow
    _report(9, "Wasserstein concentration", ok,
            f"calibrated c0 = {c0:.3f}; held-out exceedance over the "
            f"2e^-x^2 bound at most {worst:+.2e} across n in "
            "{1e2,1e3,1e4}, x in [0.5,3]")


def test_criterion_10_continuity_variance():
    cfg = _cfg("continuity", ("ladder", {"r0": 0.2, "L": 6}),
               ("extra", {"d0": 0.25, "excursions": 200_000,
                          "dbar_points": 5}))
    records, _ = run_experiment(cfg)
    slope_rec = next(r for r in records if r.params.get("summary") == "slope")
    mean_ok = all(abs(r.extra["mean_z"]) <= 3.0 for r in records
                  if "mean_z" in r.extra)
    ok = abs(slope_rec.estimate - 2.0) <= 0.3 and mean_ok
    _report(10, "continuity variance", ok,
            f"slope of log Var(diff) on log dbar = {slope_rec.estimate:.3f} "
            f"(target 2 +- 0.3); per-point mean-difference |z| <= 3: "
            f"{mean_ok}")


def test_criterion_11_wasserstein_exactness():
    from scipy.optimize import linprog

    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        na, nb = rng.integers(1, 7, 2)
        atoms_a = np.sort(rng.uniform(0.0, 2.0 * math.pi, na))
        atoms_b = np.sort(rng.uniform(0.0, 2.0 * math.pi, nb))
        w_a = rng.dirichlet(np.ones(na))
        w_b = rng.dirichlet(np.ones(nb))
        ours = excursions.wasserstein1(
            excursions.DiscreteMeasure(atoms_a, w_a),
            excursions.DiscreteMeasure(atoms_b, w_b),
        )
        cost = np.abs(np.subtract.outer(atoms_a, atoms_b)).ravel()
        a_eq = []
        for i in range(na):
            row = np.zeros((na, nb))
            row[i, :] = 1.0
            a_eq.append(row.ravel())
        for j in range(nb):
            row = np.zeros((na, nb))
            row[:, j] = 1.0
            a_eq.append(row.ravel())
        res = linprog(cost, A_eq=np.array(a_eq),
                      b_eq=np.concatenate([w_a, w_b]), method="highs")
        worst = max(worst, abs(ours - res.fun))
    ok = worst <= 1e-9
    _report(11, "Wasserstein exactness", ok,
            f"1e3 random instances, support <= 6: worst |diff| = {worst:.2e}")


def test_criterion_12_plane_sphere_coupling():
    cfg = _cfg("coupling", ("extra", {"paths": 1000,
                                      "paths_materialized": 50}))
    records, _ = run_experiment(cfg)
    sandwich = records[0]
    clock = records[1]
    ok = (sandwich.estimate <= 0.01
          and clock.estimate <= 1e-9
          and sandwich.extra["d2"] > sandwich.extra["d4"])
    _report(12, "plane-sphere coupling", ok,
            f"eps in {{0.02,0.01,0.005}} at 1e3 paths: held-out sandwich "
            f"violation rate {sandwich.estimate:.2%}; clock monotone, "
            f"worst exit-time mismatch {clock.estimate:.1e}")
