import numpy as np
import pytest

from zklab import carleman as cm
from zklab.errors import SupportError

R2 = 2.0


@pytest.fixture(scope="module")
def bump():
    return cm.TestFunctionG(2 * R2, 2 * R2, R2 / 4, 0.1, 0.9, 1.0)


@pytest.fixture(scope="module")
def alpha():
    return cm.min_alpha(R2, cm.TimeProfile())


class TestProfile:
    def test_plateau_and_ends(self):
        p = cm.TimeProfile()
        assert p(0.0) == 0.0 and p(1.0) == 0.0 and p(0.5) == p.height

    def test_closed_form_derivative_bounds(self):
        p = cm.TimeProfile()
        t = np.linspace(0, 1, 200001)
        assert np.max(np.abs(p(t, 1))) == pytest.approx(p.sup_d1, rel=1e-6)
        assert np.max(np.abs(p(t, 2))) == pytest.approx(p.sup_d2, rel=1e-4)

    def test_derivative_by_differences(self):
        p = cm.TimeProfile()
        t = np.array([0.1, 0.2, 0.8, 0.85])
        h = 1e-6
        np.testing.assert_allclose((p(t + h) - p(t - h)) / (2 * h), p(t, 1), rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("kw", [dict(r=0.0), dict(r=0.5), dict(height=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            cm.TimeProfile(**kw)


class TestMinAlpha:
    @pytest.mark.parametrize("R", [1.0, 2.0, 4.0])
    def test_constant_profile_floor(self, R):
        assert cm.min_alpha(R, cm.TimeProfile(height=0.0)) == pytest.approx(R**1.5, rel=1e-15)

    def test_default_profile(self):
        p = cm.TimeProfile()
        m1 = max(p.sup_d1, np.sqrt(p.sup_d2), 1.0)
        assert cm.min_alpha(4.0, p) == pytest.approx(np.sqrt(m1 * 64), rel=1e-15)

    @pytest.mark.parametrize("R", [1.0, 1.7, 3.0])
    def test_scaling(self, R):
        p = cm.TimeProfile()
        assert abs(cm.min_alpha(4 * R, p) / cm.min_alpha(R, p) - 8) <= 1e-12

    def test_rejects_small_R(self):
        with pytest.raises(ValueError):
            cm.min_alpha(0.5, cm.TimeProfile())


class TestAdmissibility:
    def test_far_bump_admissible(self, bump):
        assert cm.check_admissible(bump, cm.CarlemanWeight(R2)) >= 0.05

    def test_origin_rejected(self):
        g = cm.TestFunctionG(0.0, 0.0, 0.5, 0.1, 0.9)
        with pytest.raises(SupportError):
            cm.check_admissible(g, cm.CarlemanWeight(R2))

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("R", [1.0, 4.0])
    def test_generated_keep_margin(self, seed, R):
        g = cm.generate_admissible_g(seed, R)
        assert cm.support_margin(g, cm.CarlemanWeight(R)) >= 0.05

    def test_generator_is_reproducible(self):
        assert cm.generate_admissible_g(7, 2.0) == cm.generate_admissible_g(7, 2.0)

    @pytest.mark.parametrize("kw", [dict(radius=0.0), dict(t0=0.5, t1=0.5), dict(t0=-0.1)])
    def test_invalid_bump(self, kw):
        base = dict(cx=1.0, cy=1.0, radius=0.3, t0=0.1, t1=0.9)
        with pytest.raises(ValueError):
            cm.TestFunctionG(**{**base, **kw})


class TestConjugated:
    def test_unconjugated_limit(self, bump):
        res = cm.conjugated_apply(bump, 0.0, cm.CarlemanWeight(R2))
        assert np.all(res.S == 0)
        np.testing.assert_allclose(res.H, res.A, atol=1e-12 * np.max(np.abs(res.A)))

    @pytest.mark.parametrize("factor", [1.0, 2.0])
    def test_split_identity_and_skewness(self, bump, factor):
        w = cm.CarlemanWeight(R2)
        res = cm.conjugated_apply(bump, factor * cm.min_alpha(R2, w.profile), w)
        assert res.identity_error <= 1e-8
        assert res.skew_defect <= 1e-8

    def test_symmetric_pairing(self, bump):
        w = cm.CarlemanWeight(R2)
        h = cm.TestFunctionG(bump.cx + 0.05, bump.cy - 0.03, 0.4, 0.15, 0.85, 1.3)
        a, b = cm.symmetric_pairing(bump, h, cm.min_alpha(R2, w.profile), w)
        assert a != 0.0
        assert abs(a - b) <= 1e-8 * abs(a)


class TestInequality:
    def test_vacuous(self, bump, alpha):
        rep = cm.check_inequality_18(bump.scaled(0.0), R2, alpha)
        assert rep.vacuous and rep.ratio == 0.0

    @pytest.mark.parametrize("factor", [1.0, 2.0])
    def test_holds_with_sqrt3(self, bump, alpha, factor):
        rep = cm.check_inequality_18(bump, R2, factor * alpha)
        assert rep.eps_disc <= 0.05
        assert rep.holds(np.sqrt(3.0))

    def test_homogeneous(self, bump, alpha):
        a = cm.check_inequality_18(bump, R2, alpha).ratio
        b = cm.check_inequality_18(bump.scaled(10.0), R2, alpha).ratio
        assert b == pytest.approx(a, rel=1e-12)

    def test_zero_coefficients_bitwise(self, bump, alpha):
        a = cm.check_inequality_18(bump, R2, alpha)
        b = cm.check_inequality_24(bump, R2, alpha, 0.0, 0.0)
        assert a == b

    def test_small_constant_coefficient(self):
        R = 8.0
        g = cm.TestFunctionG(2 * R, 2 * R, R / 4, 0.1, 0.9)
        alpha = cm.min_alpha(R, cm.TimeProfile())
        a = cm.check_inequality_18(g, R, alpha).ratio
        b = cm.check_inequality_24(g, R, alpha, 0.0, 1e-3).ratio
        assert b == pytest.approx(a, rel=1e-2)

    def test_negative_alpha_rejected(self, bump):
        with pytest.raises(ValueError):
            cm.check_inequality_18(bump, R2, -1.0)
