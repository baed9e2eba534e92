"""Closed-form solution families and the steady travelling-wave residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .spectral import Field, SpectralGrid, derivative


@dataclass(frozen=True)
class BFamilyParams:
    b: float
    c: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.b) and np.isfinite(self.c)):
            raise ValueError("b and c must be finite")


@dataclass(frozen=True)
class LeftonParams:
    amplitude: float
    center: float
    b: float

    def __post_init__(self):
        if not self.b < -1:
            raise ValueError(f"leftons require b < -1, got b={self.b}")

    @property
    def gamma(self) -> float:
        return -(self.b + 1.0) / 2.0


@dataclass(frozen=True)
class MultipeakonState:
    momenta: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.momenta, dtype=float))
        q = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if p.shape != q.shape or p.ndim != 1 or p.size == 0:
            raise ValueError("momenta and positions must be equal-length, non-empty 1-D arrays")
        object.__setattr__(self, "momenta", p)
        object.__setattr__(self, "positions", q)


def offset(x, x0, period=None):
    """``x - x0``, folded to the nearest periodic image when ``period`` is given."""
    d = np.asarray(x, dtype=float) - x0
    if period is not None:
        d = (d + 0.5 * period) % period - 0.5 * period
    return d


def peakon_eval(x, t, params: BFamilyParams, x0: float = 0.0, period=None):
    """``c exp(-|x - x0 - c t|)``; the same for every b."""
    return params.c * np.exp(-np.abs(offset(x, x0 + params.c * t, period)))


def multipeakon_eval(state: MultipeakonState, x, period=None):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p, q in zip(state.momenta, state.positions):
        out = out + p * np.exp(-np.abs(offset(x, q, period)))
    return out


def _log_cosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - np.log(2.0)


def lefton_eval(x, params: LeftonParams, period=None):
    """``A cosh(gamma (x - x0))^(-1/gamma)`` with ``gamma = -(b + 1)/2``."""
    g = params.gamma
    xi = offset(x, params.center, period)
    return params.amplitude * np.exp(-_log_cosh(g * xi) / g)


def lefton_norm_squared(b: float, amplitude: float = 1.0) -> float:
    """Whole-line integral of the squared lefton, by adaptive quadrature."""
    shape = LeftonParams(1.0, 0.0, b)
    half, _ = integrate.quad(lambda s: lefton_eval(s, shape) ** 2, 0.0, np.inf,
                             epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * half * amplitude**2


def lefton_amplitude_for_norm(b: float, norm_squared: float = 1.0) -> float:
    """Amplitude giving a lefton of prescribed squared L2 norm."""
    return float(np.sqrt(norm_squared / lefton_norm_squared(b)))


def gaussian_ic(x, sigma: float, x0: float, period=None):
    """Unit-mass Gaussian ``exp(-(x - x0)^2 / sigma^2) / (sigma sqrt(pi))``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = offset(x, x0, period)
    return np.exp(-(d / sigma) ** 2) / (sigma * np.sqrt(np.pi))


def steady_residual(u: Field, c: float, g: float, b: float) -> Field:
    """Pointwise residual of the integrated travelling-wave equation.

    ``c (u'' - u) + (b + 1) u^2 / 2 + (1 - b) u'^2 / 2 - u u'' + g``.

    ``g`` enters with a plus sign: with the opposite sign and ``g > 0`` the
    first integral ``u'^2(u)`` is convex with a single zero at the constant
    state, so no solitary wave exists for ``b = 1``. With the plus sign,
    positive ``g`` labels smooth solitons over a positive background that
    sharpen into the peakon as ``g -> 0``.
    """
    u1 = derivative(u, 1).values
    u2 = derivative(u, 2).values
    v = u.values
    r = c * (u2 - v) + 0.5 * (b + 1.0) * v**2 + 0.5 * (1.0 - b) * u1**2 - v * u2 + g
    return Field(u.grid, r)


def sample(grid: SpectralGrid, func, *args, **kwargs) -> Field:
    """Nodal sampling of a closed-form profile with periodic images folded in."""
    return Field(grid, func(grid.x, *args, period=grid.domain_length, **kwargs))
