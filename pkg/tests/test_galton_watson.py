import math

import numpy as np
import pytest

from thickpoints import galton_watson as gw
from thickpoints.analytic import BarrierSpec, bound_envelope
from thickpoints.errors import PreconditionError


class TestTransitionPmf:
    def test_small_values_against_convolution(self):
        # brute-force convolution of geometric(1/2) masses
        base = gw.offspring_pmf(np.arange(64))
        conv = base.copy()
        for n in range(1, 5):
            pm = gw.transition_pmf(n, np.arange(64))
            assert np.max(np.abs(pm - conv[:64])) < 1e-14
            conv = np.convolve(conv, base)[:256]
        assert gw.transition_pmf(1, 0) == pytest.approx(0.5)
        assert gw.transition_pmf(2, 0) == pytest.approx(0.25)

    def test_normalisation(self):
        j = np.arange(6000)
        for n in range(1, 51):
            assert gw.transition_pmf(n, j).sum() == pytest.approx(1.0, abs=1e-12)

    def test_absorption_row(self):
        pm = gw.transition_pmf(0, np.arange(5))
        assert pm[0] == 1.0 and pm[1:].sum() == 0.0

    def test_criticality(self):
        j = np.arange(4000)
        assert float((j * gw.offspring_pmf(j)).sum()) == pytest.approx(1.0)
        for n in (1, 7, 40):
            assert float((j * gw.transition_pmf(n, j)).sum()) == pytest.approx(
                n, abs=1e-10
            )


class TestSimulate:
    def test_absorbed_at_zero(self):
        rng = np.random.default_rng(0)
        traj = gw.simulate_gw(0, 5, rng)
        assert np.all(traj == 0)

    def test_trajectories_absorb(self):
        rng = np.random.default_rng(1)
        trajs = gw.simulate_gw(3, 12, rng, n_paths=2000)
        died = trajs[:, -1] == 0
        revived = (trajs[:, :-1] == 0) & (trajs[:, 1:] > 0)
        assert not revived.any()
        assert died.any()

    def test_martingale_mean(self):
        rng = np.random.default_rng(2)
        trajs = gw.simulate_gw(10, 5, rng, n_paths=1_000_000)
        for l in range(6):
            m = trajs[:, l].mean()
            se = trajs[:, l].std() / math.sqrt(len(trajs))
            assert abs(m - 10.0) <= 3.0 * max(se, 1e-9)

    def test_extinction_probability(self):
        rng = np.random.default_rng(3)
        l = 4
        trajs = gw.simulate_gw(1, l, rng, n_paths=500_000)
        emp = np.mean(trajs[:, -1] == 0)
        exact = l / (l + 1.0)
        assert abs(emp - exact) <= 3.0 * math.sqrt(exact * (1 - exact) / len(trajs))
        pi = gw.terminal_distribution(1, 30, 600)
        assert pi[0] == pytest.approx(30.0 / 31.0, abs=1e-12)


class TestSqrtIncrementTail:
    def test_theta_zero(self):
        assert gw.sqrt_increment_tail(5, 3, 0.0) == pytest.approx(1.0)

    def test_certificate(self):
        probs, lost = gw.sqrt_increment_tail_grid([50], 10, [5.0])
        assert lost < 1e-12

    def test_matches_simulation(self):
        rng = np.random.default_rng(4)
        trajs = gw.simulate_gw(50, 10, rng, n_paths=300_000)
        emp = np.mean(np.abs(np.sqrt(2.0 * trajs[:, 10]) - 10.0) >= 5.0)
        exact = gw.sqrt_increment_tail(50, 10, 5.0)
        se = math.sqrt(exact * (1 - exact) / len(trajs))
        assert abs(emp - exact) <= 3.0 * se

    def test_gaussian_envelope_small_grid(self):
        thetas = np.array([1.0, 2.0, 4.0])
        probs, _ = gw.sqrt_increment_tail_grid([2, 10, 40], 8, thetas)
        env = np.exp(-thetas[None, None, :] ** 2
                     / (2.0 * np.arange(1, 9)[None, :, None]))
        assert float((probs / env).max()) < 5.0


class TestBarrierProbability:
    def test_unconstrained_matches_convolution(self):
        prob = gw.barrier_probability(gw.GWBarrierProblem(
            n0=4, L=10, barrier=lambda l: 1e9, terminal=("bin", 2.0, 1.0))).prob
        pi = gw.terminal_distribution(4, 10, 4000)
        s = np.sqrt(2.0 * np.arange(len(pi)))
        direct = pi[(s >= 2.0 - 1e-12) & (s <= 3.0 + 1e-12)].sum()
        assert prob == pytest.approx(direct, abs=1e-12)

    def test_monotone_in_barrier_and_bin(self):
        grid = [0.5, 1.5, 2.5]
        probs = []
        for z in grid:
            probs.append(gw.barrier_probability(gw.GWBarrierProblem(
                n0=3, L=8, barrier=BarrierSpec("center", 8, z=z),
                terminal=("bin", 2.0, 1.0))).prob)
        assert probs == sorted(probs)
        narrow = gw.barrier_probability(gw.GWBarrierProblem(
            n0=3, L=8, barrier=BarrierSpec("center", 8, z=1.0),
            terminal=("bin", 2.0, 0.5))).prob
        wide = gw.barrier_probability(gw.GWBarrierProblem(
            n0=3, L=8, barrier=BarrierSpec("center", 8, z=1.0),
            terminal=("bin", 2.0, 2.0))).prob
        assert narrow <= wide

    def test_skip_levels_never_decrease(self):
        base = gw.GWBarrierProblem(n0=3, L=9,
                                   barrier=BarrierSpec("center", 9, z=1.0),
                                   terminal=("bin", 2.0, 1.0))
        skip = gw.GWBarrierProblem(n0=3, L=9,
                                   barrier=BarrierSpec("center", 9, z=1.0),
                                   terminal=("bin", 2.0, 1.0),
                                   skip=frozenset({4, 5}))
        assert gw.barrier_probability(skip).prob >= gw.barrier_probability(
            base).prob

    def test_terminal_bins_partition(self):
        # bins over a partition sum to the bin-free probability
        problem = dict(n0=3, L=7, barrier=BarrierSpec("center", 7, z=2.0))
        total = gw.barrier_probability(gw.GWBarrierProblem(
            terminal=("tail", 0.0), **problem)).prob
        edges = np.arange(0.0, 40.0, 0.7)
        parts = 0.0
        for lo in edges:
            parts += gw.barrier_probability(gw.GWBarrierProblem(
                terminal=("bin", lo, 0.7 - 1e-12), **problem)).prob
        assert parts == pytest.approx(total, abs=1e-10)

    def test_probabilities_in_unit_interval(self):
        res = gw.barrier_probability(gw.GWBarrierProblem(
            n0=2, L=6, barrier=BarrierSpec("upper", 6, z=0.5),
            terminal=("tail", 1.0)))
        assert 0.0 <= res.prob <= 1.0

    def test_tube_constraint(self):
        with_tube = gw.barrier_probability(gw.GWBarrierProblem(
            n0=8, L=6, barrier=lambda l: 12.0, tube=lambda l: 1.0,
            terminal=("bin", 4.0, 1.0))).prob
        without = gw.barrier_probability(gw.GWBarrierProblem(
            n0=8, L=6, barrier=lambda l: 12.0,
            terminal=("bin", 4.0, 1.0))).prob
        assert with_tube <= without
        assert with_tube > 0

    def test_mean_propagation(self):
        pi = gw.terminal_distribution(10, 6, 3000)
        j = np.arange(len(pi))
        assert float((pi * j).sum()) == pytest.approx(10.0, abs=1e-10)


class TestEnvelopeSweeps:
    def test_gw_upper_single_constant(self):
        grid = [dict(L=24, x=math.sqrt(2 * m), y=math.sqrt(2 * mm),
                     a=math.sqrt(2 * m) + 2.0, b=math.sqrt(2 * mm) + 2.0)
                for m in (2, 8, 32) for mm in (2, 8, 32)]
        rep = gw.envelope_check("gw_barrier_upper", grid)
        assert rep.fitted_constant < 10.0
        for row in rep.rows:
            assert row.dp <= rep.fitted_constant * row.envelope * (1 + 1e-12)

    def test_gw_lower_positive_constant(self):
        grid = [dict(L=24, x=math.sqrt(2 * m), y=math.sqrt(2 * mm),
                     a=math.sqrt(2 * m) + 2.0, b=math.sqrt(2 * mm) + 2.0,
                     C=0.5, Ct=3.0)
                for m in (16, 64, 144) for mm in (16, 64, 144)]
        rep = gw.envelope_check("gw_barrier_lower", grid)
        assert rep.fitted_constant > 0.0
        for row in rep.rows:
            assert row.dp >= rep.fitted_constant * row.envelope * (1 - 1e-12)

    def test_endpoint_family_bounded_ratio(self):
        grid = [dict(L=L, z=z, n0=1) for L in (8, 14, 20)
                for z in (0.0, 1.0, 2.0)]
        rep = gw.envelope_check("barrier_endpoint", grid)
        assert rep.fitted_constant < 5.0
        rep_lo = gw.envelope_check("barrier_endpoint_lower", grid)
        assert rep_lo.fitted_constant > 0.0

    def test_left_families_run(self):
        grid = [dict(L=L, z=z, n0=2, xhat=2.0) for L in (8, 14)
                for z in (-1.5, 0.0, 1.5)]
        rep = gw.envelope_check("barrier_endpoint_left", grid)
        assert 0 < rep.fitted_constant < 20.0
        grid_i = [dict(L=14, k=k, z=z, p=p, n0=1)
                  for k in (7, 10) for z in (0.0, 1.0) for p in (0, 2)]
        rep_i = gw.envelope_check("barrier_interior", grid_i)
        assert rep_i.fitted_constant < 5.0

    def test_window_family_regime(self):
        grid = [dict(L=32, k=29, z=1.0, j=j, m=m) for j in (0, 2)
                for m in (2, 3)]
        rep = gw.envelope_check("barrier_window", grid)
        assert rep.fitted_constant < 5.0
        with pytest.raises(Exception):
            bound_envelope("barrier_window", L=16, k=14, z=1.0, j=0, m=5)

    def test_unknown_family(self):
        with pytest.raises(PreconditionError):
            gw.envelope_check("no_family", [])
