import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zklab import smoothing as sm


def grid(n=32, hw=8.0):
    return sm.Grid3D.centered(n, hw)


class TestSymbol:
    def test_origin_value(self):
        assert sm.m0_eval(0.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(-0.5)

    def test_forms_agree(self):
        rng = np.random.default_rng(0)
        xi, eta, tau = rng.uniform(-5, 5, size=(3, 1000))
        d = sm.m0_eval(xi, eta, tau, 1.0, 1.0)
        r = sm.m0_eval(xi, eta, tau, 1.0, 1.0, form="rewritten")
        ok = np.isfinite(d)
        assert np.max(np.abs(d[ok] - r[ok]) / np.abs(d[ok])) <= 1e-12

    def test_b_vanishes_on_ellipse(self):
        th = np.linspace(0, 2 * np.pi, 50)
        r = np.sqrt(2.0 / 3.0)
        _, b = sm.ab_parts(r * np.cos(th), r * np.sin(th), 1.0, 1.0)
        assert np.max(np.abs(b)) <= 1e-14

    def test_both_shifts_zero_rejected(self):
        with pytest.raises(ValueError):
            sm.m0_eval(1.0, 1.0, 1.0, 0.0, 0.0)

    @pytest.mark.parametrize("kl", [(3, 0), (1, 2), (-1, 0)])
    def test_orders_checked(self, kl):
        with pytest.raises(ValueError):
            sm.mkl_eval(0.5, 0.5, 0.5, 1.0, 1.0, *kl)

    def test_singular_points_are_nan(self):
        # tau + a = 0 and b = 0 on the ellipse
        r = np.sqrt(2.0 / 3.0)
        a, _ = sm.ab_parts(r, 0.0, 1.0, 1.0)
        assert sm.is_singular(r, 0.0, -a, 1.0, 1.0)
        assert np.isnan(sm.m0_eval(r, 0.0, -a, 1.0, 1.0))


class TestPartialFractions:
    def test_cube_roots_of_unity(self):
        pt = sm.partial_fractions_m20(0.0, 1.0, 1.0, 0.0)
        roots = np.sort_complex(np.exp(2j * np.pi * np.arange(3) / 3))
        np.testing.assert_allclose(np.sort_complex(pt.roots), roots, atol=1e-12)

    def test_residues_are_one_third(self):
        pt = sm.partial_fractions_m20(0.7, -1.3, 1.0, 1.0)
        v = pt.roots
        res = [v[j] ** 2 / np.prod([v[j] - v[k] for k in range(3) if k != j]) for j in range(3)]
        np.testing.assert_allclose(res, 1 / 3, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(xi=st.floats(-5, 5), eta=st.floats(-5, 5), tau=st.floats(-20, 20))
    def test_reconstruction(self, xi, eta, tau):
        pt = sm.partial_fractions_m20(eta, tau, 1.0, 1.0)
        direct = sm.m20_direct(xi, eta, tau, 1.0, 1.0)
        assert abs(pt.evaluate(xi) - direct) <= 1e-10 * max(1.0, abs(direct))


class TestOperator:
    def test_zero_input(self):
        g = grid()
        out = sm.apply_T0(g, np.zeros(g.shape), 1.0, 1.0)
        assert np.all(out.values == 0)

    def test_round_trip(self):
        g = grid()
        h = sm.gaussian_bump(sx=1.0, sy=0.8, st=0.9)(*g.mesh())
        back = sm.apply_H(g, sm.apply_T0(g, h, 1.0, 1.0).values, 1.0, 1.0)
        assert np.linalg.norm(back - h) <= 1e-6 * np.linalg.norm(h)

    def test_multiplier_bound(self):
        g = grid()
        h = sm.gaussian_bump()(*g.mesh())
        m, _ = sm._symbol_on_grid(g, 1.0, 1.0, 0, 0)
        out = sm.apply_T0(g, h, 1.0, 1.0).values
        assert np.linalg.norm(out) <= np.max(np.abs(m)) * np.linalg.norm(h) * (1 + 1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sm.apply_T0(grid(), np.zeros((4, 4, 4)), 1.0, 1.0)


class TestBounds:
    def test_bound62_gaussian(self):
        rep = sm.check_bound_62(sm.gaussian_bump(), grid(48, 10.0), 1.0, 1.0)
        assert rep.status == "ok" and rep.ratio <= 1.05

    def test_bound62_homogeneous(self):
        g = grid()
        h = sm.gaussian_bump()(*g.mesh())
        a = sm.check_bound_62(h, g, 1.0, 1.0, refine=False).ratio
        b = sm.check_bound_62(10 * h, g, 1.0, 1.0, refine=False).ratio
        assert abs(a - b) <= 1e-12 * a

    def test_A4_second_order(self):
        rep = sm.check_bound_A4(sm.gaussian_bump(), grid(), 1.0, 1.0, 2, 0)
        assert rep.ratio <= 1.05

    def test_A4_axis_swap(self):
        g = grid()
        h = sm.gaussian_bump(cx=0.3, cy=-0.2, sx=1.0, sy=0.7)(*g.mesh())
        a = sm.check_bound_A4(h, g, 1.0, 1.0, 2, 0, refine=False)
        b = sm.check_bound_A4(np.swapaxes(h, 0, 1), g.swap_xy(), 1.0, 1.0, 0, 2, axis="y", refine=False)
        assert abs(a.ratio - b.ratio) <= 1e-10 * a.ratio

    def test_A4_needs_unit_shifts(self):
        with pytest.raises(ValueError):
            sm.check_bound_A4(sm.gaussian_bump(), grid(), 0.5, 1.0, 0, 0)

    def test_zero_input_vacuous(self):
        g = grid()
        assert sm.check_bound_62(np.zeros(g.shape), g, 1.0, 1.0, refine=False).status == "vacuous"

    def test_wide_input_inconclusive(self):
        g = grid(32, 4.0)
        rep = sm.check_bound_62(sm.gaussian_bump(sx=2.0, sy=2.0, st=2.0), g, 1.0, 1.0, refine=False)
        assert rep.status == "inconclusive" and not rep.passed

    def test_corpus_reproducible(self):
        g = grid(16, 4.0)
        X, Y, T = g.mesh()
        a = [f(X, Y, T) for f in sm.bump_corpus(3, 11)]
        b = [f(X, Y, T) for f in sm.bump_corpus(3, 11)]
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u, v)
