"""Point spectrum of the peakon: bands, the half-line solution and eigenvectors."""

import numpy as np
import pytest

from bfamily import point_spectrum as ps
from bfamily.point_spectrum import SpectralPointQuery as Q


class TestBands:
    def test_r3(self):
        assert ps.exponent_r3(Q(0.3, 0.5, 1.0)) == pytest.approx(1.2)
        assert ps.exponent_r3(Q(0.2 + 0.4j, -1.0, 2.0)) == pytest.approx(2.9 - 0.2j)

    @pytest.mark.parametrize("space,bound", [("L2_Cd", 1.5), ("setA", 0.5), ("Hs", 0.8)])
    def test_bounds(self, space, bound):
        assert ps.band_bound(0.5, 1.0, space, s=1.2) == pytest.approx(bound)

    def test_setA_edge_is_inclusive(self):
        assert ps.band_membership(Q(0.5, 0.5), "setA").member
        assert not ps.band_membership(Q(0.5 + 1e-9, 0.5), "setA").member
        assert not ps.band_membership(Q(1.5, 0.5), "L2_Cd").member
        assert ps.band_membership(Q(-1.4, 0.5), "L2_Cd").member

    def test_imaginary_axis_excluded(self):
        assert not ps.band_membership(Q(0.7j, 0.5), "L2_Cd").member

    def test_empty_band_for_b_above_one(self):
        v = ps.band_membership(Q(0.1, 1.5), "setA")
        assert v.empty and not v.member

    def test_errors(self):
        with pytest.raises(ValueError):
            ps.band_bound(0.5, 1.0, "H1")
        with pytest.raises(ValueError):
            ps.band_bound(0.5, 1.0, "Hs")
        with pytest.raises(ValueError):
            Q(0.1, 0.5, c=0.0)
        with pytest.raises(ValueError):
            Q(0.1, 0.5, s=1.5)

    def test_sobolev(self):
        assert ps.sobolev_membership(1.0)
        assert not ps.sobolev_membership(0.9)
        assert ps.sobolev_membership(0.75, s=1.2)
        assert not ps.sobolev_membership(0.7, s=1.2)


@pytest.fixture(scope="module")
def F():
    return ps.solve_F(Q(0.3, 0.5, 1.0))


@pytest.fixture(scope="module")
def F0():
    return ps.solve_F(Q(0.2, 0.0, 1.0))


class TestHalfLine:
    def test_precondition(self):
        with pytest.raises(ValueError):
            ps.solve_F(Q(1.5, 0.5, 1.0))

    def test_boundary_value_and_decay(self, F):
        assert F(np.array([0.0]))[0] == 0
        assert F.tail_rate() > 0
        xi = np.linspace(-F.depth, -1.0, 50)
        assert np.all(np.isfinite(F(xi)))

    def test_exponentials_solve_homogeneous_equation(self):
        q = Q(0.37 + 0.1j, 0.2, 1.3)
        xi = np.linspace(-5, -0.1, 7)
        for s in (1.0, -1.0):
            e = np.exp(s * xi)
            r = ps.left_residual(e, s * e, e, s * e, xi, q)
            np.testing.assert_allclose(r, 0.0, atol=1e-13)

    @pytest.mark.parametrize("lam,b", [(0.3, 0.5), (0.2 + 0.3j, -1.0), (0.5, 0.0)])
    def test_series_solves_equation_near_zero(self, lam, b):
        q = Q(lam, b)
        series = ps.frobenius_series(q)
        t = np.array([0.02, 0.05])
        d = series.derivatives(t, 3)
        r = ps.left_residual(d[0], -d[1], d[2], -d[3], -t, q)
        scale = np.abs(d[3]) + np.abs(d[0])
        assert np.max(np.abs(r) / scale) < 1e-6

    def test_series_leading_power(self):
        q = Q(0.3, 0.5)
        s = ps.frobenius_series(q)
        t = np.array([1e-6])
        assert abs(s.value(t)[0] / t[0] ** s.r3 - 1.0) < 1e-5

    def test_logarithmic_case(self):
        s = ps.frobenius_series(Q(0.5, 0.5))
        assert s.log_case and s.r3 == 1

    def test_derivative_consistent(self, F):
        xi = np.array([-3.0, -1.0, -0.5])
        h = 1e-5
        fd = (F(xi + h) - F(xi - h)) / (2 * h)
        np.testing.assert_allclose(F.derivative(xi), fd, rtol=1e-6)


class TestLemmaAndW:
    def test_lemma_nonzero(self, F0):
        lem = ps.lemma_integral(F0)
        assert lem.nonzero and lem.error < 1e-8 * lem.modulus

    def test_w_prime_matches_closed_shape(self, F0):
        B = ps.fit_w_prime(F0, -1.0)
        xi = np.array([-4.0, -2.0, -0.5])
        np.testing.assert_allclose(ps.w_prime_numeric(F0, xi), B * ps.w_prime_shape(xi, F0.query),
                                   rtol=1e-6)

    def test_w_real_for_real_lambda(self, F0):
        _, w = ps.w_from_F(F0)
        assert ps.sign_constancy(w)

    def test_sign_constancy_half_plane(self):
        assert ps.sign_constancy(np.array([1.0, 2.0, 3.0]))
        assert not ps.sign_constancy(np.array([1.0, -2.0]))
        assert ps.sign_constancy(np.exp(1j * np.linspace(0, 3.0, 20)))
        assert not ps.sign_constancy(np.exp(1j * np.linspace(0, 3.3, 20)))

    def test_identity_ratio(self, F0):
        lhs, rhs = ps.identity_sides(F0)
        assert rhs / lhs == pytest.approx(-3.0, rel=1e-8)


class TestOperator:
    def test_peakon_derivative_is_kernel_at_zero(self):
        q = Q(0.0, 0.5, 1.0)
        res, _ = ps.eigen_residual(ps.peakon_derivative_fn(1.0), q, 40.0)
        assert res < 1e-8

    def test_reflection_antisymmetry(self):
        q = Q(0.4, 0.5, 1.0)
        g = lambda x: np.exp(-x * x)  # noqa: E731
        v = ps.TwoSidedFunction(g, lambda x: -2 * x * g(x), 1.0, 1.0)
        Lv = ps.apply_Lw(v, q, window=12.0)
        assert np.all(np.isfinite(Lv.values))
        odd = ps.apply_Lw(v.reflect(), q, window=12.0)
        np.testing.assert_allclose(odd.values, -Lv.values[::-1], atol=1e-10)

    def test_linear(self):
        q = Q(0.4, 0.5, 1.0)
        a, b = ps.peakon_derivative_fn(1.0), ps.exp_abs_fn()
        lhs = ps.apply_Lw(a * 2.0 + b, q).values
        rhs = 2.0 * ps.apply_Lw(a, q).values + ps.apply_Lw(b, q).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_requires_decay(self):
        v = ps.TwoSidedFunction(lambda x: np.ones_like(x), lambda x: np.zeros_like(x), 1.0, 1.0)
        with pytest.raises(ps.InsufficientDecay):
            ps.apply_Lw(v, Q(0.1, 0.5))


class TestEigenvector:
    def test_lambda_zero(self):
        ev = ps.construct_eigenvector(Q(0.0, 0.5, 1.0))
        assert ev.residual < 1e-8
        assert ev.jump == pytest.approx(-2.0)

    @pytest.mark.parametrize("re", [0.1, 0.3])
    def test_in_band(self, re):
        ev = ps.construct_eigenvector(Q(re, 0.5, 1.0))
        assert ev.residual < 1e-6
        assert ev.jump == pytest.approx(-2.0 * 1.0)

    def test_reflection(self):
        ev = ps.construct_eigenvector(Q(-0.2, 0.5, 1.0))
        assert ev.reflected and ev.residual < 1e-6

    def test_outside_band(self):
        with pytest.raises(ValueError):
            ps.construct_eigenvector(Q(1.6, 0.5, 1.0))

    def test_b_two_excluded(self):
        with pytest.raises(ValueError):
            ps.construct_eigenvector(Q(0.1, 2.0, 1.0))


class TestTransform:
    @pytest.mark.parametrize("r3", [1.2, 0.6 + 0.3j, 2.5])
    def test_closed_form(self, r3):
        w = np.array([-3.0, 0.0, 0.7, 5.0])
        np.testing.assert_allclose(ps.transform_T_numeric(r3, w), ps.transform_T_closed(r3, w),
                                   rtol=1e-9)

    def test_decay_order(self):
        r3 = 1.3
        w = np.array([1e3, 2e3])
        mag = np.abs(ps.transform_T_closed(r3, w))
        assert np.log2(mag[0] / mag[1]) == pytest.approx(r3 + 1.0, abs=1e-3)
