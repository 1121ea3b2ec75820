import math

import numpy as np
import pytest

from shrinkerlab import functionals as fn
from shrinkerlab import manifold as mf
from shrinkerlab import weights as wt

SQ2 = math.sqrt(2.0)
CIRCLE_ENTROPY = math.sqrt(2 * math.pi / math.e)


@pytest.fixture(scope="module")
def circle_shrinker():
    return mf.build_samples(mf.catalog_make("sphere", (1, SQ2)), 512)


@pytest.fixture(scope="module")
def sphere_shrinker():
    return mf.build_samples(mf.catalog_make("sphere", (2, 2.0)), (64, 128))


@pytest.fixture(scope="module")
def veronese_unit():
    return mf.build_samples(mf.catalog_make("veronese", (1.0,)), (64, 128))


@pytest.fixture(scope="module")
def line_1d():
    # sinh-stretched truncated line, wide enough for Moebius-weight masses
    return mf.build_samples(mf.catalog_make("plane_patch", (1, 1e8, 1, 18.0)), 4096)


class TestGaussianDensityAt:
    def test_flat_patch_is_one(self):
        patch = mf.build_samples(mf.catalog_make("plane_patch", (2, 30.0)), (256, 256))
        for t in (0.5, 1.0, 2.0):
            assert fn.gaussian_density_at(patch, np.zeros(2), t) == pytest.approx(1.0, abs=1e-6)

    def test_sphere_closed_form(self, sphere_shrinker):
        # (4 pi)^(-1) e^(-1) * 16 pi at the centered unit scale
        assert fn.gaussian_density_at(sphere_shrinker, np.zeros(3), 1.0) == pytest.approx(
            4.0 / math.e, abs=1e-6
        )

    def test_vanishes_at_large_scale(self, circle_shrinker):
        assert fn.gaussian_density_at(circle_shrinker, np.zeros(2), 1e6) <= 1e-2

    def test_rejects_bad_scale(self, circle_shrinker):
        with pytest.raises(ValueError):
            fn.gaussian_density_at(circle_shrinker, np.zeros(2), 0.0)


class TestConformalIntegral:
    def test_unit_circle_constant_integrand(self):
        s = mf.build_samples(mf.catalog_make("sphere", (1, 1.0)), 256)
        assert fn.conformal_integral(s, 1, 2.0, np.zeros(2)) == pytest.approx(
            2 * math.pi, rel=1e-12
        )

    def test_truncated_line_mass(self, line_1d):
        for rho in (0.5, 1.0, 2.0, 5.0):
            got = fn.conformal_integral(line_1d, 1, rho, np.zeros(1))
            assert got == pytest.approx(2 * math.pi, abs=1e-6)

    def test_vanishes_at_small_scale(self, circle_shrinker):
        assert fn.conformal_integral(circle_shrinker, 1, 1e-8, np.zeros(2)) <= 1e-6


class TestEntropySup:
    def test_circle_shrinker(self, circle_shrinker):
        r = fn.cm_entropy(circle_shrinker)
        assert r.value == pytest.approx(CIRCLE_ENTROPY, abs=1e-3)
        assert np.linalg.norm(r.center) <= 1e-3
        assert r.scale == pytest.approx(1.0, abs=1e-2)
        assert r.converged and r.n_starts == 5

    def test_sphere_shrinker(self, sphere_shrinker):
        r = fn.cm_entropy(sphere_shrinker)
        assert r.value == pytest.approx(4.0 / math.e, abs=1e-3)

    def test_value_at_least_one_on_proper_submanifolds(self, sphere_shrinker, veronese_unit):
        for s in (sphere_shrinker, veronese_unit):
            assert fn.cm_entropy(s).value >= 1.0 - 5e-3

    def test_sup_dominates_coarse_probes(self, circle_shrinker):
        cfg = fn.OptimizerConfig()
        r = fn.cm_entropy(circle_shrinker, cfg)
        for t in cfg.scale_grid()[::7]:
            for c in (np.zeros(2), np.array([0.5, -0.3])):
                assert r.value >= fn.gaussian_density_at(circle_shrinker, c, float(t)) - 1e-12


class TestConformalSup:
    def test_round_spheres_are_one(self, sphere_shrinker):
        assert fn.ly_confvol(sphere_shrinker).value == pytest.approx(1.0, abs=1e-3)

    def test_double_cover_three_halves(self, veronese_unit):
        r = fn.ly_confvol(veronese_unit)
        assert r.value == pytest.approx(1.5, abs=5e-3)
        assert r.scale == pytest.approx(2.0, abs=1e-2)

    def test_spiral_pitch_one(self):
        s = mf.build_samples(mf.catalog_make("loxodrome", (1.0, 10.0)), 8192)
        assert fn.ly_confvol(s).value == pytest.approx(SQ2, abs=1e-2)


class TestStabilized:
    def test_flat_patch_is_one(self):
        patch = mf.build_samples(mf.catalog_make("plane_patch", (1, 400.0)), 16384)
        for m in (0, 1, 3):
            assert fn.stabilized_confvol(patch, m).value == pytest.approx(1.0, abs=1e-3)

    def test_round_sphere_zero_vs_one(self):
        s1 = mf.build_samples(mf.catalog_make("sphere", (2, 1.0)), (64, 128))
        v0 = fn.stabilized_confvol(s1, 0).value
        v1 = fn.stabilized_confvol(s1, 1).value
        assert v0 == pytest.approx(1.0, abs=1e-3)
        assert v1 > 1.0 + 1e-3
        # closed form at the centered argmax: Chat(2,1) * 16/9
        assert v1 == pytest.approx(2.0 / 3.0 * 16.0 / 9.0, abs=2e-3)

    def test_spiral_constant_across_m(self):
        s = mf.build_samples(mf.catalog_make("loxodrome", (1.0, 10.0)), 8192)
        for m in (0, 1, 2, 4):
            assert fn.stabilized_confvol(s, m).value == pytest.approx(SQ2, abs=2e-2)

    def test_rejects_negative_m(self, circle_shrinker):
        with pytest.raises(ValueError):
            fn.stabilized_confvol(circle_shrinker, -1)


class TestStableEstimate:
    def test_circle_monotone_to_entropy(self, circle_shrinker):
        rep = fn.stable_confvol_estimate(circle_shrinker, [0, 1, 2, 5, 10, 25, 50])
        vals = [r.value for r in rep.results]
        assert rep.monotone
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
        assert vals[0] == pytest.approx(1.0, abs=1e-3)
        assert rep.estimate == pytest.approx(CIRCLE_ENTROPY, abs=2e-2)
        assert rep.estimate <= CIRCLE_ENTROPY + 1e-6

    def test_sphere_estimate(self, sphere_shrinker):
        rep = fn.stable_confvol_estimate(sphere_shrinker, [0, 1, 2, 5, 15, 50])
        assert rep.monotone
        assert rep.estimate == pytest.approx(4.0 / math.e, abs=2e-2)

    def test_flat_patch_constant(self):
        patch = mf.build_samples(mf.catalog_make("plane_patch", (1, 400.0)), 16384)
        rep = fn.stable_confvol_estimate(patch, [0, 1, 2])
        for r in rep.results:
            assert r.value == pytest.approx(1.0, abs=1e-3)

    def test_requires_increasing_m(self, circle_shrinker):
        with pytest.raises(ValueError):
            fn.stable_confvol_estimate(circle_shrinker, [0, 2, 1])


class TestVtLowerBound:
    def test_flat_plane_at_most_one(self):
        line = mf.build_samples(mf.catalog_make("plane_patch", (1, 400.0, 2)), 16384)
        for m in (1, 2, 4):
            for rho in (0.05, 0.5, 2.0, 20.0):
                assert fn.vt_lower_bound(line, m, rho, np.zeros(2)) <= 1.0 + 1e-6

    def test_flat_plane_ratio_identity(self):
        # on the plane the probe value is exactly Chat(N, n-N+m)/Chat(n, m)
        line = mf.build_samples(mf.catalog_make("plane_patch", (1, 400.0, 2)), 16384)
        got = fn.vt_lower_bound(line, 1, 1.0, np.zeros(2))
        assert got == pytest.approx(wt.c_hat(2, 0) / wt.c_hat(1, 1), abs=1e-6)

    def test_shrinker_probes_below_entropy(self, circle_shrinker):
        lam = fn.cm_entropy(circle_shrinker).value
        rng = np.random.default_rng(1)
        for m in (1, 2, 5):
            for rho in np.geomspace(0.05, 20, 6):
                x0 = rng.normal(0, 1, 2)
                assert fn.vt_lower_bound(circle_shrinker, m, float(rho), x0) <= lam + 1e-2

    def test_probe_matches_stabilized_integrand(self, circle_shrinker):
        n, N, m, rho = 1, 2, 3, 0.7
        x0 = np.array([0.3, -0.2])
        lhs = fn.vt_lower_bound(circle_shrinker, m, rho, x0)
        rhs = (
            wt.c_hat(N, n - N + m)
            / wt.c_hat(n, m)
            * wt.c_hat(n, m)
            * fn.modified_integral(circle_shrinker, m, rho, x0)
        )
        assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_rejects_nonintegrable(self, circle_shrinker):
        with pytest.raises(ValueError):
            fn.vt_lower_bound(circle_shrinker, 0, 1.0, np.zeros(2))


class TestIterateCheck:
    def test_unit_circle_centered(self):
        c = mf.catalog_make("sphere", (1, 1.0))
        lhs, rhs = fn.iterate_check(c, 1, 1.0, np.zeros(2), half_width=60.0, resolution=128)
        assert abs(lhs - rhs) / rhs <= 1e-4

    def test_segment(self):
        c = mf.catalog_make("plane_patch", (1, 1.0))
        lhs, rhs = fn.iterate_check(c, 1, 2.0, np.zeros(1), half_width=60.0, resolution=64)
        assert abs(lhs - rhs) / rhs <= 1e-4

    def test_off_center_translation(self):
        c = mf.catalog_make("sphere", (1, 1.0))
        lhs, rhs = fn.iterate_check(c, 1, 1.0, np.array([1.0, 1.0]), half_width=60.0, resolution=128)
        assert abs(lhs - rhs) / rhs <= 1e-4


class TestAreaRatio:
    def test_flat_patch_interior(self):
        patch = mf.build_samples(mf.catalog_make("plane_patch", (2, 3.0)), (256, 256))
        theta = fn.area_ratio_theta(patch, [(np.array([0.2, -0.3]), 1.0), (np.zeros(2), 2.0)])
        assert theta == pytest.approx(1.0, abs=1e-3)

    def test_circle_in_diameter_ball(self, circle_shrinker):
        theta = fn.area_ratio_theta(circle_shrinker, [(np.zeros(2), 2 * SQ2)])
        assert theta == pytest.approx(math.pi / 2.0, abs=1e-3)

    def test_entropy_controls_ball_mass(self, circle_shrinker, sphere_shrinker):
        rng = np.random.default_rng(3)
        for s in (circle_shrinker, sphere_shrinker):
            lam = fn.cm_entropy(s).value
            n, N = s.intrinsic_dim, s.ambient_dim
            for _ in range(25):
                p = rng.uniform(-3, 3, N)
                R = float(rng.uniform(0.3, 5.0))
                mass = fn.area_ratio_theta(s, [(p, R)]) * fn.unit_ball_volume(n) * R**n
                assert mass <= math.exp(math.pi) * lam * R**n + 1e-9

    def test_rejects_bad_radius(self, circle_shrinker):
        with pytest.raises(ValueError):
            fn.area_ratio_theta(circle_shrinker, [(np.zeros(2), -1.0)])


class TestInvariance:
    def test_rigid_motion_entropy(self):
        th = 0.8
        Q = np.array(
            [
                [math.cos(th), -math.sin(th), 0.0],
                [math.sin(th), math.cos(th), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        v1, v2 = fn.invariance_check(
            mf.catalog_make("sphere", (2, 2.0)), Q, np.array([3.0, -1.0, 2.0]), 1.0, "CM"
        )
        assert abs(v1 - v2) <= 2e-3

    def test_spiral_scaling_equals_rotation(self):
        alpha = 1.0
        chart = mf.catalog_make("loxodrome", (alpha, 10.0))
        rot = math.pi
        Q = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
        v_scaled = fn.invariance_check(chart, None, None, math.exp(-math.pi / alpha), "LY")[1]
        v_rotated = fn.invariance_check(chart, Q, None, 1.0, "LY")[1]
        assert abs(v_scaled - v_rotated) <= 2e-2

    def test_identity_transform_exact(self, circle_shrinker):
        v1, v2 = fn.invariance_check(mf.catalog_make("sphere", (1, SQ2)), None, None, 1.0, "CM")
        assert v1 == v2


class TestDominationChains:
    def test_entropy_lower_bounds_stabilized(self, sphere_shrinker):
        lam = fn.cm_entropy(sphere_shrinker).value
        for m in (0, 1, 3):
            stab = fn.stabilized_confvol(sphere_shrinker, m).value
            assert wt.c_hat(2, m) * lam <= stab + 1e-3

    def test_one_step_two_sided(self, sphere_shrinker, veronese_unit, circle_shrinker):
        for s in (sphere_shrinker, veronese_unit, circle_shrinker):
            v0 = fn.stabilized_confvol(s, 0).value
            v1 = fn.stabilized_confvol(s, 1).value
            assert v0 - 1e-3 <= v1 <= 2 * v0 + 1e-3


class TestRefined:
    def test_gap_small_under_doubling(self):
        chart = mf.catalog_make("sphere", (1, SQ2))
        r = fn.refined(chart, 256, fn.cm_entropy)
        assert r.value == pytest.approx(CIRCLE_ENTROPY, abs=1e-3)
        assert r.refinement_gap <= 1e-3

    def test_tail_bound_included(self):
        chart = mf.catalog_make("loxodrome", (1.0, 10.0))
        r = fn.refined(chart, 2048, fn.cm_entropy)
        assert r.refinement_gap >= chart.tail_bound


class TestOptimizerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            fn.OptimizerConfig(scale_min=2.0, scale_max=1.0)
        with pytest.raises(ValueError):
            fn.OptimizerConfig(scale_min=-1.0)

    def test_random_centers_high_ambient_dim(self, veronese_unit):
        cfg = fn.OptimizerConfig(seed=7)
        centers = fn._center_probes(veronese_unit, cfg)
        assert centers.shape == (cfg.n_random_centers + 1, 5)
        again = fn._center_probes(veronese_unit, fn.OptimizerConfig(seed=7))
        assert np.array_equal(centers, again)

    def test_threads_give_same_result(self, circle_shrinker):
        a = fn.cm_entropy(circle_shrinker, fn.OptimizerConfig(threads=1))
        b = fn.cm_entropy(circle_shrinker, fn.OptimizerConfig(threads=4))
        assert a.value == b.value and a.scale == b.scale
