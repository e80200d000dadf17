import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zklab.errors import InconclusiveError, WeightOverflowError
from zklab.spectral import Grid2D, RealField, derivative
from zklab.weights import (
    WeightKind, WeightSpec, apply_Js, corpus_interp, decay_rate, decay_rate_derivative, dominance_constant,
    eval_weight, gaussian_mixture_corpus, interp_check, kato_theta, p2_taylor, theta_poly,
    theta_second_factored, theta_third, weighted_norm, window_cutoff,
)


class TestDecayRate:
    def test_initial_value(self):
        assert decay_rate(0.0, 1.7) == 1.7

    @pytest.mark.parametrize("a0", [0.3, 1.0, 2.5])
    def test_halving_time(self, a0):
        assert decay_rate(2 / (27 * a0**2), a0) == pytest.approx(a0 / np.sqrt(2), rel=1e-15)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
    def test_ode_residual_by_finite_differences(self, t):
        h = 1e-5
        fd = (decay_rate(t + h, 1.0) - decay_rate(t - h, 1.0)) / (2 * h)
        exact = -6.75 * decay_rate(t, 1.0) ** 3
        assert abs(fd - exact) <= 1e-6 * abs(exact)
        assert decay_rate_derivative(t, 1.0) == pytest.approx(exact, rel=1e-15)

    def test_value_at_half(self):
        assert decay_rate(0.5, 1.0) == 1.0 / np.sqrt(1 + 6.75)

    @pytest.mark.parametrize("a0", [0.0, -1.0])
    def test_rejects_nonpositive_a0(self, a0):
        with pytest.raises(ValueError):
            decay_rate(0.1, a0)

    @settings(max_examples=40, deadline=None)
    @given(a0=st.floats(0.01, 10), t1=st.floats(0, 1), t2=st.floats(0, 1))
    def test_monotone(self, a0, t1, t2):
        lo, hi = sorted((t1, t2))
        assert decay_rate(hi, a0) <= decay_rate(lo, a0)


class TestTheta:
    def test_left_end(self):
        th, d1, _ = theta_poly(0.0)
        assert th == 0.25 and d1 == 0.0

    def test_seam_matches_power(self):
        th, d1, d2 = theta_poly(1.0)
        assert abs(th - 1.0) <= 1e-12
        assert abs(d1 - 1.5) <= 1e-12
        assert abs(d2 - 0.75) <= 1e-12

    def test_factored_second_derivative(self):
        z = np.linspace(0, 1, 1001)
        f = theta_second_factored(z)
        assert np.all(f >= 0)
        assert np.max(np.abs(f - theta_poly(z)[2])) <= 1e-12

    def test_third_derivative_by_differences(self):
        z = np.linspace(0.1, 0.9, 9)
        h = 1e-4
        fd = (theta_poly(z + h)[2] - theta_poly(z - h)[2]) / (2 * h)
        np.testing.assert_allclose(fd, theta_third(z), atol=1e-6)

    def test_outside_domain(self):
        with pytest.raises(ValueError):
            theta_poly(1.5)


class TestP2:
    def test_center_value(self):
        a = decay_rate(0.3, 1.0)
        assert p2_taylor(4.0, 0.3, 4.0, 1.0) == pytest.approx(np.exp(a * 8.0), rel=1e-15)

    def test_center_slope(self):
        a = decay_rate(0.3, 1.0)
        assert p2_taylor(4.0, 0.3, 4.0, 1.0, derivative=1) == pytest.approx(1.5 * a * 2 * np.exp(a * 8), rel=1e-14)

    def test_against_finite_difference_taylor(self):
        # P2(n+1) = f(n) + f'(n) + f''(n)/2 with derivatives of exp(z^{3/2}) taken numerically
        f = lambda z: np.exp(z**1.5)
        h = 1e-2
        v = f(4 + h * np.arange(-2, 3))
        d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
        d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
        assert p2_taylor(5.0, 0.0, 4.0, 1.0) == pytest.approx(f(4) + d1 + 0.5 * d2, rel=1e-7)

    def test_below_center_rejected(self):
        with pytest.raises(ValueError):
            p2_taylor(3.0, 0.0, 4.0, 1.0)


class TestWeightSpec:
    def test_truncated_constant_on_left(self):
        s = WeightSpec(WeightKind.TRUNCATED_PHI_N, a0=1.0, n=4, t=0.2)
        assert eval_weight(s, -3.0, -2.0) == pytest.approx(np.exp(decay_rate(0.2, 1.0) / 4), rel=1e-15)

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_kato_identity_below_n(self, n):
        s = WeightSpec(WeightKind.KATO_PHI_N, beta=0.7, n=n)
        z = n / 2
        assert eval_weight(s, z, 0.0) == np.exp(2 * 0.7 * z)

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_truncated_is_c1_across_pieces(self, n):
        s = WeightSpec(WeightKind.TRUNCATED_PHI_N, a0=1.0, n=n)
        for z0 in (0.0, 1.0, float(n)):
            e = 1e-9 * max(1.0, z0)
            lo, hi = np.exp(s.log_weight(np.array([z0 - e, z0 + e])))
            assert abs(hi - lo) <= 1e-6 * hi
            dlo, dhi = s.dz(np.array([z0 - e, z0 + e]))
            assert abs(dhi - dlo) <= 1e-6 * max(abs(dhi), 1.0)

    @pytest.mark.parametrize("kind", list(WeightKind))
    def test_dz_matches_differences(self, kind):
        kw = dict(a=0.8, beta=0.6, n=4.0, a0=0.9)
        s = WeightSpec(kind, **kw)
        z = np.array([-2.3, 0.4, 2.2, 5.1])
        h = 1e-6
        fd = (np.exp(s.log_weight(z + h)) - np.exp(s.log_weight(z - h))) / (2 * h)
        np.testing.assert_allclose(s.dz(z), fd, rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_monotone(self, n):
        s = WeightSpec(WeightKind.TRUNCATED_PHI_N, a0=1.0, n=n)
        z = np.linspace(-2, 3 * n, 1000)
        assert np.all(np.diff(s.log_weight(z)) >= 0)

    def test_reflect_mirrors(self):
        s = WeightSpec(WeightKind.EXP_LINEAR, beta=0.5)
        r = WeightSpec(WeightKind.EXP_LINEAR, beta=0.5, reflect=True)
        assert r.log_weight(1.3) == s.log_weight(-1.3)

    @pytest.mark.parametrize("kw", [dict(kind="ExpLinear"), dict(kind="TruncatedPhiN", a0=1.0),
                                    dict(kind="Poly", a=-1.0), dict(kind="ExpAbs")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            WeightSpec(**kw)

    def test_dominance_single_constant(self):
        c, per_n = dominance_constant(1.0)
        assert np.isfinite(c) and c == max(per_n.values())
        assert set(per_n) == {4, 8, 16}


class TestWeightedNorm:
    def test_zero_field(self, grid64):
        assert weighted_norm(RealField(grid64, np.zeros(grid64.shape)), WeightSpec("ExpAbs", a=1.0)) == 0.0

    def test_poly_zero_is_plain_l2(self, grid64, rng):
        f = RealField(grid64, rng.normal(size=grid64.shape))
        ref = grid64.dx * grid64.dy * np.sum(f.values**2)
        assert weighted_norm(f, WeightSpec("Poly", a=0.0)) == pytest.approx(ref, rel=1e-14)

    def test_linear_weight_closed_form(self):
        # integral of e^{-2r^2} e^{2(x+y)} = (pi/2) e^{1}
        g = Grid2D.centered(256, 12.0)
        f = RealField.from_function(g, lambda X, Y: np.exp(-(X**2 + Y**2)))
        assert weighted_norm(f, WeightSpec("ExpLinear", beta=1.0)) == pytest.approx(np.pi / 2 * np.e, rel=1e-6)

    def test_overflow_names_corner(self):
        g = Grid2D.centered(32, 40.0)
        f = RealField(g, np.ones(g.shape))
        with pytest.raises(WeightOverflowError, match="corner"):
            weighted_norm(f, WeightSpec("ExpAbs", a=3.0))

    def test_window_is_one_inside(self, grid64):
        w = window_cutoff(grid64, 0.2)
        assert w[32, 32] == 1.0 and w[0, 0] == 0.0
        assert np.all(window_cutoff(grid64, 0.0) == 1.0)


class TestBessel:
    def test_order_zero_identity(self, grid64, rng):
        f = RealField(grid64, rng.normal(size=grid64.shape))
        assert apply_Js(f, 0.0) is f

    def test_single_mode_scaling(self, grid64):
        k = 2 * np.pi * 3 / grid64.Lx
        f = RealField.from_function(grid64, lambda X, Y: np.cos(k * X))
        np.testing.assert_allclose(apply_Js(f, 1.5).values, (1 + k * k) ** 0.75 * f.values, atol=1e-12)

    def test_order_two_is_one_minus_laplacian(self, grid64):
        f = RealField.from_function(grid64, lambda X, Y: np.exp(-(X**2 + 2 * Y**2) / 3))
        lap = derivative(f, 2, 0).values + derivative(f, 0, 2).values
        np.testing.assert_allclose(apply_Js(f, 2.0).values, f.values - lap, atol=1e-10)


class TestInterp:
    @pytest.fixture
    def field(self):
        g = Grid2D.centered(128, 16.0)
        comps = gaussian_mixture_corpus(1, seed=4)[0]
        from zklab.weights import mixture_field
        return mixture_field(g, comps)

    @pytest.mark.parametrize("lemma,s,p,th", [("L27", 4.0, 4 / 3 + 0.1, 0.25 + 0.3 / 16),
                                              ("L26", 2.0, 1.0, 0.5), ("LB1", 2.0, 1.0, 0.5)])
    def test_scale_invariant(self, field, lemma, s, p, th):
        r1 = interp_check(lemma, field, s, p, th).ratio
        r7 = interp_check(lemma, field.scale(7.0), s, p, th).ratio
        assert abs(r7 - r1) <= 1e-10 * r1

    def test_lb1_endpoint_is_one(self, field):
        assert interp_check("LB1", field, 2.0, 1.0, 1.0).ratio == pytest.approx(1.0, rel=1e-12)

    def test_l27_rejects_endpoints(self, field):
        with pytest.raises(ValueError):
            interp_check("L27", field, 4.0, 1.0, 1.0)

    def test_inconclusive_near_edge(self):
        g = Grid2D.centered(64, 4.0)
        f = RealField.from_function(g, lambda X, Y: np.exp(-((X - 3.5) ** 2 + Y**2)))
        assert interp_check("LB1", f, 2.0, 1.0, 0.5).status == "inconclusive"
        with pytest.raises(InconclusiveError):
            interp_check("LB1", f, 2.0, 1.0, 0.5, raise_inconclusive=True)

    def test_corpus_reproducible(self):
        assert gaussian_mixture_corpus(5, 9) == gaussian_mixture_corpus(5, 9)
        g = Grid2D.centered(64, 16.0)
        res = corpus_interp("LB1", g, gaussian_mixture_corpus(5, 9), 2.0, 1.0, 0.5)
        assert res.n_inconclusive == 0 and np.isfinite(res.max_ratio)


def test_kato_theta_saturates():
    z = np.linspace(0, 40, 400)
    th = kato_theta(z, 8.0)
    assert np.all(np.diff(th) >= -1e-15)
    assert th[-1] < 40
