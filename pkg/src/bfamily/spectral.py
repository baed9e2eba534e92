"""Periodic Fourier pseudospectral primitives.

Fields are real and stored in physical space; Fourier coefficients are
computed on demand with ``scipy.fft`` using the ``"forward"`` normalisation,
so that coefficient ``n`` is the amplitude of ``exp(i k_n x)``.

The Nyquist coefficient is zeroed in every odd-order derivative and in the
inputs/outputs of dealiased products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on ``[0, domain_length)``."""

    domain_length: float
    num_points: int

    def __post_init__(self):
        n = self.num_points
        if not isinstance(n, (int, np.integer)) or n < 4 or n & (n - 1):
            raise ValueError(f"num_points must be a power of two >= 4, got {n!r}")
        if not np.isfinite(self.domain_length) or self.domain_length <= 0:
            raise ValueError(f"domain_length must be positive, got {self.domain_length!r}")

    @property
    def spacing(self) -> float:
        return self.domain_length / self.num_points

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.num_points) * self.spacing
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Non-negative wavenumbers of the real transform (length N/2 + 1)."""
        k = 2.0 * np.pi * np.arange(self.num_points // 2 + 1) / self.domain_length
        k.flags.writeable = False
        return k

    @cached_property
    def k_full(self) -> np.ndarray:
        """Signed wavenumbers in FFT order (length N); Nyquist appears once, negative."""
        k = 2.0 * np.pi * sfft.fftfreq(self.num_points, self.spacing)
        k.flags.writeable = False
        return k

    @cached_property
    def k_odd(self) -> np.ndarray:
        """Wavenumbers used by odd-order derivatives (Nyquist zeroed)."""
        k = np.array(self.k)
        k[-1] = 0.0
        k.flags.writeable = False
        return k

    @property
    def nyquist(self) -> float:
        return float(self.k[-1])

    def symbol(self, order: int) -> np.ndarray:
        """Fourier multiplier of ``d^order/dx^order`` on the real-transform band."""
        k = self.k_odd if order % 2 else self.k
        return (1j * k) ** order

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfft(values, norm="forward")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.irfft(coeffs, n=self.num_points, norm="forward")

    # 3/2-rule helpers -------------------------------------------------------

    @property
    def padded_points(self) -> int:
        return 3 * self.num_points // 2

    def to_padded(self, coeffs: np.ndarray) -> np.ndarray:
        """Physical values on the 3/2-extended grid of a band-limited spectrum."""
        half = self.num_points // 2
        padded = np.zeros(self.padded_points // 2 + 1, dtype=complex)
        padded[:half] = coeffs[:half]
        return sfft.irfft(padded, n=self.padded_points, norm="forward")

    def from_padded(self, values: np.ndarray) -> np.ndarray:
        """Truncate a 3/2-grid function back to the band (Nyquist zeroed)."""
        half = self.num_points // 2
        out = np.zeros(half + 1, dtype=complex)
        out[:half] = sfft.rfft(values, norm="forward")[:half]
        return out


@dataclass(frozen=True, eq=False)
class Field:
    """A real function sampled on a :class:`SpectralGrid`."""

    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: SpectralGrid, func) -> "Field":
        return cls(grid, func(grid.x))

    @classmethod
    def from_spectrum(cls, grid: SpectralGrid, coeffs: np.ndarray) -> "Field":
        return cls(grid, grid.inverse(coeffs))

    def spectrum(self) -> np.ndarray:
        return self.grid.forward(self.values)

    def l2_norm_squared(self) -> float:
        """Trapezoid (= spectrally exact) value of the integral of u^2."""
        return float(np.sum(self.values**2) * self.grid.spacing)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.spacing)

    def _same_grid(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def make_grid(domain_length: float, num_points: int) -> SpectralGrid:
    return SpectralGrid(float(domain_length), int(num_points))


def derivative(f: Field, order: int = 1) -> Field:
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    return Field.from_spectrum(f.grid, f.grid.symbol(order) * f.spectrum())


def helmholtz(u: Field) -> Field:
    """Apply ``1 - d^2/dx^2``."""
    return Field.from_spectrum(u.grid, (1.0 + u.grid.k**2) * u.spectrum())


def helmholtz_inverse(m: Field) -> Field:
    """Solve ``(1 - d^2/dx^2) u = m``; the symbol ``1 + k^2`` never vanishes."""
    return Field.from_spectrum(m.grid, m.spectrum() / (1.0 + m.grid.k**2))


def dealiased_product(f: Field, g: Field) -> Field:
    """Pointwise product with aliasing removed by the 3/2 rule."""
    f._same_grid(g)
    grid = f.grid
    prod = grid.to_padded(f.spectrum()) * grid.to_padded(g.spectrum())
    return Field.from_spectrum(grid, grid.from_padded(prod))


def convolve_phi(f: Field) -> Field:
    """Periodic convolution with ``exp(-|x|)``, realised as ``2 (1 + k^2)^-1``."""
    return Field.from_spectrum(f.grid, 2.0 * f.spectrum() / (1.0 + f.grid.k**2))


def differentiation_matrix(grid: SpectralGrid, order: int) -> np.ndarray:
    """Dense matrix of :func:`derivative`, assembled column by column.

    Applying the transform-based derivative to the identity keeps the matrix
    bit-for-bit consistent with the operator used everywhere else.
    """
    eye = np.eye(grid.num_points)
    coeffs = sfft.rfft(eye, axis=0, norm="forward")
    coeffs *= grid.symbol(order)[:, None]
    return sfft.irfft(coeffs, n=grid.num_points, axis=0, norm="forward")


def helmholtz_inverse_matrix(grid: SpectralGrid) -> np.ndarray:
    eye = np.eye(grid.num_points)
    coeffs = sfft.rfft(eye, axis=0, norm="forward") / (1.0 + grid.k**2)[:, None]
    return sfft.irfft(coeffs, n=grid.num_points, axis=0, norm="forward")
