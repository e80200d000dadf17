from dataclasses import replace

import numpy as np
import pytest

from zklab import experiments as xp
from zklab.evolution import DispersionSymbol, linear_propagate
from zklab.spectral import Grid2D, RealField
from zklab.weights import WeightKind, WeightSpec, decay_rate, weighted_norm


class TestTiltedRepresentation:
    def test_untilted_matches_propagator(self):
        g = Grid2D.centered(128, 16.0)
        u0 = xp.gaussian_datum(g, 1.0, 1.0)
        ref = linear_propagate(u0, 0.4, DispersionSymbol.SYMMETRIC).values
        lg = xp.log_tilted_linear_gaussian(g, 1.0, 1.0, 0.4, 0.0)
        big = np.abs(ref) > 1e-6
        np.testing.assert_allclose(np.exp(lg[big]), np.abs(ref[big]), rtol=1e-8)

    def test_tilt_is_exponential_factor(self):
        # wide box: the tilt weights periodic images of the dispersive tail differently
        g = Grid2D.centered(256, 32.0)
        X, Y = g.mesh()
        l0 = xp.log_tilted_linear_gaussian(g, 1.0, 1.0, 0.3, 0.0)
        l1 = xp.log_tilted_linear_gaussian(g, 1.0, 1.0, 0.3, 0.5)
        # away from the nodes of u, where log|u| is ill-conditioned
        core = (np.abs(X) < 4) & (np.abs(Y) < 4) & (l0 > l0.max() - 5)
        np.testing.assert_allclose((l1 - l0)[core], 0.5 * (X + Y)[core], atol=1e-7)

    def test_weighted_mass_matches_direct_sum_when_benign(self):
        g = Grid2D.centered(256, 32.0)
        u0 = xp.gaussian_datum(g, 1.0, 1.0)
        u = linear_propagate(u0, 0.2, DispersionSymbol.SYMMETRIC)
        rate = 0.03  # corner weight e^{15}: roundoff stays far below the mass
        direct = weighted_norm(u, WeightSpec(WeightKind.EXP_PLUS, a=rate), window=0.1)
        tm = xp.tilted_weighted_mass(g, 1.0, 1.0, 0.2, rate, 0.1)
        assert np.exp(tm.log_windowed) == pytest.approx(direct, rel=1e-10)

    def test_reflect_is_point_mirror(self):
        g = Grid2D.centered(16, 4.0)
        X, Y = g.mesh()
        f = RealField(g, X + 2 * Y**2 + 0.1 * X * Y)
        r = xp.reflect(f)
        # grid point -x sits at index (n - i) mod n
        assert r.values[3, 5] == f.values[13, 11]
        np.testing.assert_array_equal(xp.reflect(r).values, f.values)


@pytest.fixture(scope="module")
def report():
    return xp.run_decay15(xp.Decay15Spec(n=256, n_times=6))


class TestDecay15:
    @pytest.mark.parametrize("kw", [dict(a0=0.0), dict(amplitude=0.0), dict(n_times=1)])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            xp.Decay15Spec(**kw)

    def test_passes(self, report):
        assert report.status == "pass"

    def test_curve_columns(self, report):
        curve = report.table("curve")
        assert [c.split(" ")[0] for c in curve.header()] == ["t", "a_t", "W_adaptive", "W_frozen"]

    def test_rate_closed_form(self, report):
        t, a = report.table("curve").rows[-1][:2]
        assert t == 0.5 and a == decay_rate(0.5, 1.0)

    def test_frozen_rate_dominates(self, report):
        rows = report.table("curve").rows
        assert all(r[3] >= r[2] for r in rows)


class TestPersistence:
    def small(self, **kw):
        return replace(xp.PersistenceSpec(n=128, n_times=6, mirror=False), **kw)

    def test_unweighted_exponent_vanishes(self):
        rep = xp.run_persistenceB(self.small(beta=0.0))
        a = {x.name: x for x in rep.assertions}["C_hat_zero_without_weight"]
        assert a.passed and a.value <= 1e-8

    def test_exponent_stable_when_n_doubles(self):
        rep = xp.run_persistenceB(self.small(beta=0.5, ns=(8, 16), t_end=0.5))
        vals = {x.name: x.value for x in rep.assertions}
        c8, c16 = vals["C_hat_finite_n8"], vals["C_hat_finite_n16"]
        assert np.isfinite(c8) and abs(c16 - c8) <= 0.2 * max(abs(c8), abs(c16))

    def test_mirror_transfer(self):
        rep = xp.run_persistenceB(self.small(mirror=True))
        a = {x.name: x for x in rep.assertions}["mirror_transfer"]
        assert a.passed

    @pytest.mark.parametrize("kw", [dict(beta=-1.0), dict(ns=()), dict(amplitude=0.0)])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            xp.PersistenceSpec(**kw)


class TestAnnulus:
    @pytest.mark.parametrize("R", [1.0, 3.0, 7.5])
    def test_diamond_area(self, R):
        x, y, w = xp.diamond_nodes(R, 6)
        assert w.sum() == pytest.approx(2.0, rel=1e-14)
        p, q = np.abs(x + y), np.abs(x - y)
        assert np.all((p >= R - 1) & (p <= R) & (q >= R - 1) & (q <= R))

    def test_quadrature_of_polynomial(self):
        # integral of (x+y)^2 over the region equals the closed form 2 * mean of p^2 on [R-1, R]
        R = 4.0
        x, y, w = xp.diamond_nodes(R, 4)
        assert np.sum(w * (x + y) ** 2) == pytest.approx(2 * (R**3 - (R - 1) ** 3) / 3, rel=1e-13)

    def test_slope_of_exact_trend(self):
        R = np.arange(3.0, 10.0)
        assert xp.trend_slope(R, np.exp(2.0 - 0.3 * R**1.5)) == pytest.approx(-0.3, rel=1e-12)

    def test_slope_needs_two_positive_values(self):
        assert np.isnan(xp.trend_slope(np.array([3.0, 4.0]), np.array([0.0, 1.0])))

    def test_identical_trajectories(self):
        spec = xp.AnnulusSpec(n=64, R_values=(3.0, 4.0), n_snapshots=3, refine=False)
        t1, _ = xp._pair(spec, spec.n)
        assert np.all(xp.annulus_norms(t1, t1, [3.0, 4.0]) == 0.0)

    def test_small_run_has_negative_slope(self):
        spec = xp.AnnulusSpec(n=64, R_values=(3.0, 5.0, 7.0, 9.0), n_snapshots=5, refine=False,
                              nonlinear=False)
        rep = xp.run_annulus_trend(spec)
        vals = {a.name: a for a in rep.assertions}
        assert vals["negative_slope"].passed and vals["A_R_positive"].passed
