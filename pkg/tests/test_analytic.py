import math

import numpy as np
import pytest
from scipy import integrate

from thickpoints import analytic, geometry
from thickpoints.errors import PreconditionError, RegimeError


class TestHittingProbability:
    def test_degenerate_start(self):
        assert analytic.hitting_probability(0.3, 0.3, 1.0) == 1.0

    def test_geometric_mean(self):
        u1, u3 = 0.02, 0.7
        assert analytic.hitting_probability(u1, math.sqrt(u1 * u3), u3) == (
            pytest.approx(0.5)
        )

    def test_log_ratio(self):
        assert analytic.hitting_probability(
            math.exp(-5), math.exp(-2), 1.0
        ) == pytest.approx(0.4)

    def test_monotone_onto_unit_interval(self):
        u1, u3 = 0.01, 1.0
        grid = np.linspace(u1 * 1.0001, u3 * 0.9999, 500)
        vals = [analytic.hitting_probability(u1, u, u3) for u in grid]
        assert np.all(np.diff(vals) < 0)  # deeper start hits outer sooner
        assert vals[0] > 0.999 and vals[-1] < 0.001
        with pytest.raises(PreconditionError):
            analytic.hitting_probability(0.5, 0.4, 1.0)


class TestExcursionCountTail:
    def test_leading_factor(self):
        assert analytic.excursion_count_tail(2, 5, 0) == pytest.approx(0.5)

    def test_start_at_top(self):
        assert analytic.excursion_count_tail(4, 5, 0) == pytest.approx(1.0)

    def test_arithmetic(self):
        assert analytic.excursion_count_tail(2, 5, 10) == pytest.approx(
            0.0536870912
        )

    def test_valid_survival_function(self):
        for k, l in ((1, 3), (2, 5), (3, 8)):
            vals = analytic.excursion_count_tail(k, l, np.arange(50))
            assert vals[0] <= 1.0
            assert np.all(np.diff(vals) < 0)
        with pytest.raises(PreconditionError):
            analytic.excursion_count_tail(5, 5, 1)


class TestThicknessScales:
    def test_count_threshold_cancellation(self):
        for L in (4, 10, 100):
            assert analytic.count_threshold(math.log(L), L) == pytest.approx(
                2.0 * L * L
            )

    def test_centering_value(self):
        assert analytic.thick_centering(math.exp(-math.e)) == pytest.approx(
            1.769932, abs=1e-5
        )
        with pytest.raises(RegimeError):
            analytic.thick_centering(0.5)

    def test_slope_value_and_monotonicity(self):
        assert analytic.barrier_slope(10) == pytest.approx(1.7697415, abs=1e-6)
        vals = [analytic.barrier_slope(L) for L in range(3, 200)]
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] < 2.0

    def test_edge_distance(self):
        assert analytic.edge_distance(3, 10) == 3
        assert analytic.edge_distance(8, 10) == 2
        assert analytic.edge_distance(10, 10) == 0

    def test_dispatcher(self):
        assert analytic.thickness_scale("slope", L=10) == analytic.barrier_slope(10)
        assert analytic.thickness_scale("count_threshold", z=1.0, L=5) == (
            analytic.count_threshold(1.0, 5)
        )

    def test_correspondence_residual_shrinks(self):
        # the offset map z -> sqrt(2 pi) z + c aligns the squared centering
        # with the count threshold; the per-level residual shrinks with L
        r0 = 0.1
        sups = {}
        for L in (50, 200, 800):
            # log(1/h_L) = L - log r0 up to O(r_L^2), far below the residual
            le = L - math.log(r0)
            m_h = math.sqrt(2.0 / math.pi) * (le - 0.5 * math.log(le))
            zs = np.linspace(0.0, math.log(L), 60)
            w = np.array([
                math.pi * (m_h + z) ** 2 / (2.0 * L) - L + math.log(L)
                for z in zs
            ])
            resid = w - analytic.occupation_count_shift(zs, 0.0)
            c = float(np.mean(resid))
            sups[L] = float(np.max(np.abs(resid - c)))
        assert sups[200] < sups[50]
        assert sups[800] < sups[200]


class TestBarriers:
    def test_upper_at_horizon(self):
        L, z = 12, 1.5
        spec = analytic.BarrierSpec("upper", L, z=z)
        assert spec(L) == pytest.approx(analytic.barrier_slope(L) * L + z)

    def test_upper_arithmetic(self):
        spec = analytic.BarrierSpec("upper", 10, z=1.0)
        assert spec(5) == pytest.approx(11.3440560, abs=1e-6)

    def test_linear_endpoints(self):
        spec = analytic.BarrierSpec("linear", 8, a=1.0, b=5.0)
        assert spec(0) == 1.0 and spec(8) == 5.0

    def test_guard_gap_identity(self):
        L, z = 16, 0.7
        up = analytic.BarrierSpec("upper", L, z=z)
        lo = analytic.BarrierSpec("lower", L, z=z)
        for l in range(L + 1):
            gap = up(l) - lo(l)
            assert gap == pytest.approx(2.0 * analytic.edge_distance(l, L) ** 0.25)

    def test_ordering_lower_center_upper(self):
        L, z = 20, 1.0
        up = analytic.BarrierSpec("upper", L, z=z)
        mid = analytic.BarrierSpec("center", L, z=z)
        lo = analytic.BarrierSpec("lower", L, z=z)
        for l in range(1, L):
            assert lo(l) <= mid(l) <= up(l)

    def test_pinned_formula(self):
        L, z, xhat = 10, -1.0, 2.0
        spec = analytic.BarrierSpec("pinned", L, z=z, xhat=xhat)
        rho = analytic.barrier_slope(L)
        for l in (0, 3, 10):
            expect = xhat * (1 - l / L) + rho * l + z * l / L
            assert spec(l) == pytest.approx(expect)

    def test_unknown_kind(self):
        with pytest.raises(PreconditionError):
            analytic.barrier_value(analytic.BarrierSpec("zig", 5), 1)


class TestGreen:
    def test_boundary_vanishes(self):
        assert analytic.green_disk(0.7, np.array([0.7, 0.0]), np.zeros(2)) == (
            pytest.approx(0.0, abs=1e-14)
        )

    def test_center_log_value(self):
        a = 0.5
        x = np.array([a / math.e, 0.0])
        assert analytic.green_disk(a, x, np.zeros(2)) == pytest.approx(
            1.0 / math.pi, abs=1e-7
        )

    def test_symmetry_and_positivity(self):
        rng = np.random.default_rng(3)
        a = 1.3
        for _ in range(10_000):
            x, y = rng.uniform(-0.9, 0.9, (2, 2))
            if np.hypot(*x) >= a or np.hypot(*y) >= a or np.allclose(x, y):
                continue
            gxy = analytic.green_disk(a, x, y)
            gyx = analytic.green_disk(a, y, x)
            assert abs(gxy - gyx) < 1e-10
            assert gxy > 0

    def test_rejects_bad_points(self):
        with pytest.raises(PreconditionError):
            analytic.green_disk(1.0, np.zeros(2), np.zeros(2))
        with pytest.raises(PreconditionError):
            analytic.green_disk(1.0, np.array([2.0, 0.0]), np.zeros(2))


class TestCircleAverage:
    def test_exact_value(self):
        lad = geometry.build_ladder(0.5, 4)
        for y in (np.zeros(2), np.array([lad.r[2] * 0.5, 0.1 * lad.r[2]])):
            if np.hypot(*y) <= lad.r[2]:
                assert analytic.circle_average_green(2, lad, y) == pytest.approx(
                    1.0 / math.pi
                )

    def test_quadrature_oracle(self):
        lad = geometry.build_ladder(0.5, 4)
        rng = np.random.default_rng(4)
        theta = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
        circle = lad.r[2] * np.column_stack([np.cos(theta), np.sin(theta)])
        for _ in range(100):
            y = rng.uniform(-1, 1, 2)
            y *= rng.uniform(0, lad.r[2]) / max(np.hypot(*y), 1e-12)
            vals = [analytic.green_disk(lad.r[1], x, y) for x in circle]
            assert np.mean(vals) == pytest.approx(1.0 / math.pi, abs=1e-8)

    def test_outside_point_log_average(self):
        # circle average of log|x - y| is log|y| once |y| exceeds the radius
        b = 0.3
        y = np.array([b * 1.05, 0.0])
        theta = np.linspace(0, 2 * math.pi, 8192, endpoint=False)
        circle = b * np.column_stack([np.cos(theta), np.sin(theta)])
        quad = np.mean(np.log(np.hypot(circle[:, 0] - y[0], circle[:, 1] - y[1])))
        assert analytic.circle_average_log(b, y) == pytest.approx(
            math.log(np.hypot(*y)), abs=1e-12
        )
        assert quad == pytest.approx(math.log(np.hypot(*y)), abs=1e-6)
        with pytest.raises(PreconditionError):
            lad = geometry.build_ladder(0.5, 4)
            analytic.circle_average_green(2, lad, y=np.array([lad.r[1], 0.0]))


class TestOccupationMoment:
    def test_first_moment_exact(self):
        lad = geometry.build_ladder(0.2, 3)
        alpha = float(lad.r[1])
        eps = geometry.geodesic_of_euclidean(alpha)
        mom = analytic.occupation_moment(1, 1, alpha, lad)
        assert mom.value == pytest.approx(
            geometry.spherical_cap_area(eps) / math.pi
        )
        # normalised by the cap area this is exactly 1/pi
        assert mom.value / geometry.spherical_cap_area(eps) == pytest.approx(
            1.0 / math.pi
        )

    def test_second_moment_below_envelope(self):
        lad = geometry.build_ladder(0.2, 3)
        alpha = float(lad.r[1]) / 3.0
        mom = analytic.occupation_moment(
            2, 1, alpha, lad, rng=np.random.default_rng(9), samples=120_000,
            c=2.0, c0=1.0,
        )
        assert mom.stderr < 0.02 * mom.value
        assert mom.value <= mom.envelope

    def test_regime_rejection(self):
        lad = geometry.build_ladder(0.2, 3)
        with pytest.raises(RegimeError):
            analytic.occupation_moment(1, 1, float(lad.r[1]) / 500.0, lad)


class TestCircleExitLaw:
    def test_normalisation(self):
        law = analytic.CircleExitLaw(math.exp(-1))
        val, err = integrate.quad(law.density, 0.0, 2 * math.pi, epsabs=1e-12)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_symmetry(self):
        law = analytic.CircleExitLaw(0.4)
        t = np.linspace(0.01, math.pi, 50)
        assert np.allclose(law.density(t), law.density(2 * math.pi - t))

    def test_peak_value(self):
        rho = math.exp(-1)
        assert analytic.exit_angle_density(rho, 0.0) == pytest.approx(
            0.344404, abs=1e-5
        )

    def test_cdf_matches_density(self):
        law = analytic.CircleExitLaw(0.55)
        ts = np.linspace(0.05, 2 * math.pi - 0.05, 40)
        for t in ts:
            val, _ = integrate.quad(law.density, 0.0, t, epsabs=1e-11)
            assert law.cdf(t) == pytest.approx(val, abs=1e-9)

    def test_ppf_inverts_cdf(self):
        law = analytic.CircleExitLaw(0.3)
        u = np.linspace(0.001, 0.999, 101)
        assert np.max(np.abs(law.cdf(law.ppf(u)) - u)) < 1e-10

    def test_sampler_matches_fourier_coefficient(self):
        law = analytic.CircleExitLaw(math.exp(-1))
        rng = np.random.default_rng(12)
        draws = law.sample(rng, 200_000)
        coef = np.mean(np.cos(draws))
        assert abs(coef - math.exp(-1)) < 3.0 / math.sqrt(len(draws))

    def test_rejects_bad_ratio(self):
        with pytest.raises(PreconditionError):
            analytic.CircleExitLaw(1.0)


class TestBoundEnvelope:
    def test_barrier_endpoint_value(self):
        val = analytic.bound_envelope("barrier_endpoint", L=20, z=0.0)
        assert val == pytest.approx(math.exp(-40.0))

    def test_sup_count_ratio_monotone(self):
        for L in (30,):
            zs = np.arange(1.0, math.log(L), 0.25)
            vals = np.array(
                [analytic.bound_envelope("sup_count_tail", z=z, L=L) for z in zs]
            )
            ratios = vals[1:] / vals[:-1]
            # ratio shape ((z+dz)/z) e^{-2 dz}, decreasing in z for z >= 1
            assert np.all(np.diff(ratios) < 0)
            assert np.all(ratios < 1)

    def test_increment_tail_collapse_at_equal_offsets(self):
        L, k, a = 20, 12, 3.0
        val = analytic.bound_envelope("increment_tail", L=L, k=k, a=a, b=a)
        assert val == pytest.approx(
            math.exp(-2.0 * (L - k)) * L ** (2.0 * (L - k) / L)
        )

    def test_regime_rejection(self):
        with pytest.raises(RegimeError):
            analytic.bound_envelope("barrier_endpoint", L=10, z=5.0)
        with pytest.raises(RegimeError):
            analytic.bound_envelope("increment_tail", L=10, k=5, a=8.0, b=0.0)
        with pytest.raises(RegimeError):
            analytic.bound_envelope("gw_barrier_upper", L=10, x=1.0, y=2.0,
                                    a=2.0, b=3.0)
        with pytest.raises(RegimeError):
            analytic.bound_envelope("no_such_kind", z=1.0)

    def test_lower_shape(self):
        val = analytic.bound_envelope("sup_count_lower", z=0.0, c=1.0)
        assert val == pytest.approx(0.5)

    def test_calibrate_constant(self):
        vals = np.array([1.0, 2.0, 3.0])
        envs = np.array([2.0, 2.0, 2.0])
        assert analytic.calibrate_constant(vals, envs, "upper") == 1.5
        assert analytic.calibrate_constant(vals, envs, "lower") == 0.5
