import math

import numpy as np
import pytest

from shrinkerlab import heatlab as hl
from shrinkerlab import weights as wt


@pytest.fixture(scope="module")
def what_density():
    # heavy-tailed weight density: tau = rho = 1
    return hl.density_from_weight(1, 1, 1.0, 100.0, 0.05, tail_tol=1e-3)


class TestGridDensity:
    def test_normalized_mass(self, what_density):
        assert what_density.mass == pytest.approx(1.0, abs=1e-12)

    def test_peak_matches_closed_form(self, what_density):
        want = wt.c_hat(1, 1) * (4 * math.pi) ** -0.5
        assert what_density.peak == pytest.approx(want, rel=2e-4)

    def test_rejects_negative_values(self):
        with pytest.raises(hl.GridError):
            hl.GridDensity(1, 1.0, 0.1, np.array([1.0, -0.5, 1.0]))

    def test_rejects_bad_rank(self):
        with pytest.raises(hl.GridError):
            hl.GridDensity(2, 1.0, 0.1, np.ones(5))

    def test_boundary_ratio(self):
        g = hl.gaussian_density(1, 1.0, 30.0, 0.05)
        assert g.boundary_ratio() <= 1e-10


class TestDensityFromWeight:
    def test_tail_violation_raises(self):
        with pytest.raises(hl.TailMassError):
            hl.density_from_weight(1, 1, 1.0, 60.0, 0.05)

    def test_gaussian_like_tail_passes_default(self):
        # m large: near-Gaussian tails meet the strict default
        d = hl.density_from_weight(1, 60, 1.0, 60.0, 0.05)
        assert d.mass == pytest.approx(1.0, abs=1e-12)

    def test_resolution_precondition(self):
        with pytest.raises(hl.GridError):
            hl.density_from_weight(1, 1, 0.04, 60.0, 0.05, tail_tol=1e-2)

    def test_virtual_time_is_rho(self):
        for rho in (0.5, 2.0):
            d = hl.density_from_weight(1, 1, rho, 150.0 * rho, math.sqrt(rho) / 25, tail_tol=1e-3)
            assert hl.estimate_virtual_time(d).tau == pytest.approx(rho, rel=0.02)

    def test_2d_mass_and_tau(self):
        d = hl.density_from_weight(2, 1, 1.0, 15.0, 0.06, tail_tol=2e-2)
        assert d.mass == pytest.approx(1.0, abs=1e-12)
        assert hl.estimate_virtual_time(d).tau == pytest.approx(1.0, rel=0.02)


class TestHeatAt:
    def test_mass_preserved(self, what_density):
        for t in (0.5, 4.0):
            assert abs(hl.heat_at(what_density, t).mass - 1.0) <= 1e-6

    def test_semigroup(self, what_density):
        one = hl.heat_at(what_density, 1.0)
        two = hl.heat_at(hl.heat_at(what_density, 0.5), 0.5)
        assert np.abs(one.values - two.values).max() <= 1e-6

    def test_near_delta_evolves_to_gaussian(self):
        u0 = hl.gaussian_density(1, 0.01, 20.0, 0.02)
        ref = hl.gaussian_density(1, 1.01, 20.0, 0.02)
        ev = hl.heat_at(u0, 1.0)
        assert np.abs(ev.values - ref.values).max() <= 1e-4

    def test_extent_precondition(self):
        g = hl.gaussian_density(1, 1.0, 20.0, 0.05)
        with pytest.raises(hl.GridError):
            hl.heat_at(g, 20.0**2)

    def test_kernel_resolution_precondition(self):
        g = hl.gaussian_density(1, 1.0, 20.0, 0.05)
        with pytest.raises(hl.GridError):
            hl.heat_at(g, 1e-4)

    def test_2d_mass(self):
        g = hl.gaussian_density(2, 0.5, 15.0, 0.06)
        assert abs(hl.heat_at(g, 1.0).mass - 1.0) <= 1e-6


class TestEstimateVirtualTime:
    def test_gaussian_equality(self):
        for t in (0.25, 1.0, 4.0):
            g = hl.gaussian_density(1, t, 60.0, 0.05)
            est = hl.estimate_virtual_time(g)
            assert est.tau == pytest.approx(t, rel=0.02)
            assert est.boundary_margin > 3 * g.h

    def test_conformal_weight_closed_form(self):
        w = hl.grid_from_callable(1, 60.0, 0.05, lambda y: wt.weight_eval(2.0, 1.0, np.zeros(1), y))
        assert hl.estimate_virtual_time(w).tau == pytest.approx(0.5, rel=0.02)

    def test_normalization_invariant(self):
        w1 = hl.grid_from_callable(1, 60.0, 0.05, lambda y: wt.weight_eval(2.0, 1.0, np.zeros(1), y))
        w2 = hl.grid_from_callable(
            1, 60.0, 0.05, lambda y: 7.3 * wt.weight_eval(2.0, 1.0, np.zeros(1), y), normalize=False
        )
        assert hl.estimate_virtual_time(w1).tau == pytest.approx(
            hl.estimate_virtual_time(w2).tau, rel=1e-10
        )

    def test_mixture_matches_analytic_scan(self):
        # independent oracle: exact log-density curvature of the two-bump
        # mixture, minimized over a dense scan
        t1, t2, c = 1.0, 1.4, 3.0

        def mix(x):
            return 0.5 * wt.gaussian_eval(1, t1, c, x) + 0.5 * wt.gaussian_eval(1, t2, -c, x)

        xs = np.linspace(-25, 25, 500001)
        g1 = wt.gaussian_eval(1, t1, c, xs[:, None])
        g2 = wt.gaussian_eval(1, t2, -c, xs[:, None])
        u = 0.5 * g1 + 0.5 * g2
        du = 0.5 * g1 * (-(xs - c) / (2 * t1)) + 0.5 * g2 * (-(xs + c) / (2 * t2))
        d2u = 0.5 * g1 * ((xs - c) ** 2 / (4 * t1**2) - 1 / (2 * t1)) + 0.5 * g2 * (
            (xs + c) ** 2 / (4 * t2**2) - 1 / (2 * t2)
        )
        curv = d2u / u - (du / u) ** 2
        tau_oracle = -1.0 / (2.0 * curv.min())

        grid = hl.grid_from_callable(1, 30.0, 0.02, mix)
        est = hl.estimate_virtual_time(grid)
        assert est.tau == pytest.approx(tau_oracle, rel=0.02)
        # the mixture's virtual time sits between the component times
        assert min(t1, t2) * (1 - 1e-6) <= tau_oracle < max(t1, t2)

    def test_all_below_floor_raises(self):
        vals = np.ones(41)
        vals[3:-3] = 0.0
        dens = hl.GridDensity(1, 1.0, 0.05, vals)
        with pytest.raises(hl.GridError):
            hl.estimate_virtual_time(dens)


class TestHarnack:
    def test_mollified_indicator(self):
        bump = hl.bump_density(1, 30.0, 0.02, 2.0)
        for t in (0.25, 0.5, 1.0, 2.0):
            assert hl.check_harnack(bump, t) >= -1e-3

    def test_gaussian_margin_closed_form(self):
        t0 = 0.5
        g = hl.gaussian_density(1, t0, 40.0, 0.05)
        for t in (1.0, 2.0, 4.0):
            want = 1.0 / (2 * t) - 1.0 / (2 * (t + t0))
            assert hl.check_harnack(g, t) == pytest.approx(want, rel=0.02)
            assert want > 0

    def test_margin_shrinks_for_large_times(self):
        t0 = 0.5
        g = hl.gaussian_density(1, t0, 40.0, 0.05)
        margins = [hl.check_harnack(g, t) for t in (1.0, 2.0, 4.0)]
        assert margins[0] > margins[1] > margins[2] > 0


class TestMeanValueBound:
    def test_weight_density_center(self, what_density):
        assert hl.check_meanvalue_bound(what_density, 1.0, [np.zeros(1)]) >= 0.0

    def test_gaussian_off_center(self):
        g = hl.gaussian_density(1, 1.0, 40.0, 0.05)
        assert hl.check_meanvalue_bound(g, 1.0, [np.array([3.0])]) >= 0.0

    def test_pointwise_cap(self, what_density):
        c0 = math.exp(1.0 / 12.0) / 2.0  # omega_1 = 2
        assert what_density.peak <= c0

    def test_ball_outside_grid(self, what_density):
        with pytest.raises(hl.GridError):
            hl.check_meanvalue_bound(what_density, 1.0, [np.array([99.9])])


class TestTauGrowth:
    def test_weight_density_grows(self, what_density):
        times = [0.5, 1.0, 2.0, 4.0]
        margins = hl.check_tau_growth(what_density, 1.0, times)
        for m, t in zip(margins, times):
            assert m >= -0.02 * (1.0 + t)
        # strictly super-linear growth for non-Gaussian initial data
        assert margins[-1] > 0.05

    def test_gaussian_equality(self):
        g = hl.gaussian_density(1, 1.0, 100.0, 0.0489)
        for m, t in zip(hl.check_tau_growth(g, 1.0, [0.5, 1, 2, 4]), (0.5, 1, 2, 4)):
            assert abs(m) <= 0.02 * (1.0 + t)


class TestGaussianDistance:
    def test_matching_gaussian_is_zero(self):
        g = hl.gaussian_density(1, 2.0, 40.0, 0.05)
        l1, ss = hl.gaussian_distance(g, 2.0, 0.0, np.zeros(1))
        assert l1 <= 1e-8 and ss <= 1e-8

    def test_monotone_decay(self, what_density):
        x0 = hl.grid_mean(what_density)
        T0 = -hl.grid_second_moment(what_density) / 2.0
        dists = [
            hl.gaussian_distance(hl.heat_at(what_density, t), t, T0, x0) for t in (1.0, 4.0, 16.0)
        ]
        l1s, sups = [d[0] for d in dists], [d[1] for d in dists]
        assert all(b < a for a, b in zip(l1s, l1s[1:]))
        assert all(b < a for a, b in zip(sups, sups[1:]))

    def test_requires_forward_time(self, what_density):
        with pytest.raises(hl.GridError):
            hl.gaussian_distance(what_density, 1.0, 2.0, np.zeros(1))


class TestMembershipBounds:
    def test_peak_cap(self, what_density):
        T = 1.0
        assert what_density.peak <= (4 * math.pi * T) ** -0.5 * (1 + 1e-6)

    def test_gradient_bound(self, what_density):
        T = 1.0
        grad = np.gradient(what_density.values, what_density.h)
        cap = (4 * math.pi / math.e) * (4 * math.pi * T) ** -1.5 * what_density.values
        assert np.all(grad**2 <= cap * (1 + 1e-3) + 1e-300)


class TestHessianOrder:
    def test_second_order_in_spacing(self):
        # FD curvature of log W at the origin vs the closed form
        errs = []
        for h in (0.05, 0.025, 0.0125):
            w = hl.grid_from_callable(
                1, 30.0, h, lambda y: wt.weight_eval(2.0, 1.0, np.zeros(1), y)
            )
            i = np.argmax(w.values)
            f = np.log(w.values)
            d2 = (f[i + 1] - 2 * f[i] + f[i - 1]) / w.h**2
            errs.append(abs(d2 - wt.log_hessian_weight(2.0, 1.0, np.zeros(1))[0, 0]))
        assert errs[0] / errs[1] >= 3.0
        assert errs[1] / errs[2] >= 3.0
