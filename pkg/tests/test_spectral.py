"""Spectral grid, derivatives, Helmholtz inversion and dealiased products."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bfamily.spectral import (
    Field,
    convolve_phi,
    dealiased_product,
    derivative,
    differentiation_matrix,
    helmholtz,
    helmholtz_inverse,
    helmholtz_inverse_matrix,
    make_grid,
)


class TestGrid:
    def test_spacing_for_evolution_grid(self):
        assert make_grid(200, 8192).spacing == 0.0244140625

    def test_nodes_small_grid(self):
        np.testing.assert_allclose(make_grid(2 * np.pi, 4).x, [0, np.pi / 2, np.pi, 3 * np.pi / 2])

    def test_wavenumbers_symmetric_without_nyquist(self):
        g = make_grid(10.0, 16)
        k = g.k_full[np.abs(g.k_full) < g.nyquist - 1e-12]
        np.testing.assert_allclose(np.sort(k), np.sort(-k))

    def test_odd_derivative_drops_nyquist(self):
        g = make_grid(2 * np.pi, 8)
        assert g.k_odd[-1] == 0.0
        assert g.k[-1] == pytest.approx(4.0)

    @pytest.mark.parametrize("L,N", [(-1.0, 8), (1.0, 7), (1.0, 0)])
    def test_invalid_grid(self, L, N):
        with pytest.raises(ValueError):
            make_grid(L, N)

    def test_field_rejects_wrong_shape_and_nan(self, grid64):
        with pytest.raises(ValueError):
            Field(grid64, np.zeros(10))
        with pytest.raises(ValueError):
            Field(grid64, np.full(64, np.nan))


class TestDerivative:
    @pytest.mark.parametrize("k", [1, 5, 20])
    def test_sine_first_derivative(self, grid64, k):
        f = Field.from_function(grid64, lambda x: np.sin(k * x))
        np.testing.assert_allclose(derivative(f, 1).values, k * np.cos(k * grid64.x), atol=1e-12)

    def test_cosine_second_derivative(self, grid64):
        f = Field.from_function(grid64, lambda x: np.cos(7 * x))
        np.testing.assert_allclose(derivative(f, 2).values, -49 * np.cos(7 * grid64.x), atol=1e-11)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_constant_has_zero_derivative(self, grid64, order):
        f = Field(grid64, np.full(64, 3.5))
        np.testing.assert_allclose(derivative(f, order).values, 0.0, atol=1e-13)

    def test_bad_order(self, grid64):
        with pytest.raises(ValueError):
            derivative(Field(grid64, np.zeros(64)), 4)

    def test_matrix_matches_operator(self, grid64):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(64)
        for order in (1, 2):
            D = differentiation_matrix(grid64, order)
            np.testing.assert_allclose(D @ v, derivative(Field(grid64, v), order).values, atol=1e-11)


class TestHelmholtz:
    def test_inverse_of_cosine(self, grid64):
        f = Field.from_function(grid64, lambda x: np.cos(3 * x))
        np.testing.assert_allclose(helmholtz_inverse(f).values, np.cos(3 * grid64.x) / 10, atol=1e-14)

    def test_constant_unchanged(self, grid64):
        np.testing.assert_allclose(helmholtz_inverse(Field(grid64, np.full(64, 2.0))).values, 2.0)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=64, max_size=64))
    def test_round_trip(self, vals):
        g = make_grid(2 * np.pi, 64)
        f = Field(g, vals)
        np.testing.assert_allclose(helmholtz_inverse(helmholtz(f)).values, f.values, atol=1e-10)

    def test_matrix(self, grid64):
        v = np.sin(grid64.x) + 0.3 * np.cos(4 * grid64.x)
        np.testing.assert_allclose(helmholtz_inverse_matrix(grid64) @ v,
                                   helmholtz_inverse(Field(grid64, v)).values, atol=1e-14)


class TestDealiasedProduct:
    def test_in_band_product_exact(self, grid64):
        f = Field.from_function(grid64, lambda x: np.cos(3 * x))
        g = Field.from_function(grid64, lambda x: np.sin(5 * x))
        np.testing.assert_allclose(dealiased_product(f, g).values,
                                   np.cos(3 * grid64.x) * np.sin(5 * grid64.x), atol=1e-13)

    def test_out_of_band_matches_padded_oracle(self, grid64):
        rng = np.random.default_rng(3)
        f = Field(grid64, rng.standard_normal(64))
        g = Field(grid64, rng.standard_normal(64))
        # oracle: exact product on a 2x grid, then truncation to the original band
        n, m = 64, 128
        fh = np.zeros(m // 2 + 1, complex)
        gh = np.zeros(m // 2 + 1, complex)
        fh[: n // 2] = f.spectrum()[: n // 2]
        gh[: n // 2] = g.spectrum()[: n // 2]
        prod = np.fft.rfft(np.fft.irfft(fh, m, norm="forward") * np.fft.irfft(gh, m, norm="forward"),
                           norm="forward")
        ref = np.zeros(n // 2 + 1, complex)
        ref[: n // 2] = prod[: n // 2]
        np.testing.assert_allclose(dealiased_product(f, g).spectrum(), ref, atol=1e-12)

    def test_zero_factor(self, grid64):
        f = Field.from_function(grid64, np.sin)
        assert np.all(dealiased_product(f, Field(grid64, np.zeros(64))).values == 0)

    def test_grid_mismatch(self, grid64):
        with pytest.raises(ValueError):
            dealiased_product(Field(grid64, np.zeros(64)), Field(make_grid(1.0, 64), np.zeros(64)))


class TestConvolvePhi:
    def test_constant_doubles(self, grid64):
        np.testing.assert_allclose(convolve_phi(Field(grid64, np.full(64, 1.5))).values, 3.0)

    def test_narrow_gaussian_against_quadrature(self):
        g = make_grid(60.0, 2048)
        f = Field.from_function(g, lambda x: np.exp(-((x - 30.0) ** 2) / 0.5))
        # adaptive quadrature of int exp(-|x - y|) f(y) dy, split at the kink y = x
        def direct(x):
            h = lambda y: np.exp(-abs(x - y) - (y - 30.0) ** 2 / 0.5)  # noqa: E731
            return quad(h, 20.0, x, epsabs=1e-13)[0] + quad(h, x, 40.0, epsabs=1e-13)[0]

        idx = np.arange(0, 2048, 64)
        ref = [direct(g.x[i]) for i in idx]
        np.testing.assert_allclose(convolve_phi(f).values[idx], ref, atol=1e-6)
