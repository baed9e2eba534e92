"""Dense Fourier discretisation of the linearisation about a steady profile.

For a profile ``u0`` travelling at speed ``c`` the eigenvalue problem is
``(I - D2)^-1 L(u0) v = lambda v`` with

    L(u0) = -D1 [c (D2 - I) + (b + 1) u0 + (1 - b) u0' D1 - u0 D2 - u0'']

where ``D1, D2`` are spectral differentiation matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft
import scipy.linalg

from .exact import LeftonParams, lefton_eval
from .spectral import Field, SpectralGrid, derivative, differentiation_matrix

log = logging.getLogger(__name__)

MAX_DENSE_POINTS = 2048


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    matrix: np.ndarray
    u0: Field
    c: float
    b: float

    @property
    def grid(self) -> SpectralGrid:
        return self.u0.grid

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(getattr(v, "values", v))


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    max_real_part: float
    eigenvectors: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def leading(self):
        """Index of the eigenvalue with the largest real part."""
        return int(np.argmax(self.eigenvalues.real))


def lefton_domain(b: float, length: float, tail: float = 1e-12, max_length: float = 1e5) -> float:
    """Smallest ``length * 2^k`` whose half-width puts the lefton tail below ``tail * A``."""
    shape = LeftonParams(1.0, 0.0, b)
    L = float(length)
    while lefton_eval(np.array([0.5 * L]), shape)[0] > tail:
        if 2.0 * L > max_length:
            raise ValueError(f"lefton tail stays above {tail:g} up to L = {L:g}")
        L *= 2.0
    if L != length:
        log.warning("domain widened from %g to %g to resolve the lefton tail", length, L)
    return L


def build_linearization(u0: Field, c: float, b: float) -> LinearizedOperator:
    grid = u0.grid
    n = grid.num_points
    if n > MAX_DENSE_POINTS:
        raise ValueError(f"dense spectra are capped at N={MAX_DENSE_POINTS}, got {n}")
    D1 = differentiation_matrix(grid, 1)
    D2 = differentiation_matrix(grid, 2)
    v = u0.values
    v1 = derivative(u0, 1).values
    v2 = derivative(u0, 2).values

    inner = c * D2 + (1.0 - b) * v1[:, None] * D1 - v[:, None] * D2
    inner[np.diag_indices(n)] += -c + (b + 1.0) * v - v2

    # columns through -(I - D2)^-1 D1, applied in Fourier space
    coeffs = sfft.rfft(inner, axis=0, norm="forward")
    coeffs *= (-1j * grid.k_odd / (1.0 + grid.k**2))[:, None]
    matrix = sfft.irfft(coeffs, n=n, axis=0, norm="forward")
    return LinearizedOperator(matrix, u0, float(c), float(b))


def compute_spectrum(op: LinearizedOperator, want_vectors: bool = False,
                     params: Optional[dict] = None) -> SpectrumResult:
    try:
        if want_vectors:
            w, vr = scipy.linalg.eig(op.matrix, right=True)
        else:
            w = scipy.linalg.eigvals(op.matrix)
            vr = None
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    info = {"b": op.b, "c": op.c, "N": op.grid.num_points, "L": op.grid.domain_length}
    info.update(params or {})
    info["max_real_part"] = float(np.max(w.real))
    return SpectrumResult(w, float(np.max(w.real)), vr, info)


def derivative_correlation(vec, u0: Field) -> float:
    """``|<vec, u0'>| / (|vec| |u0'|)`` with the complex inner product."""
    vec = np.asarray(vec)
    d = derivative(u0, 1).values
    nv, nd = np.linalg.norm(vec), np.linalg.norm(d)
    if nv == 0 or nd == 0:
        raise ValueError("zero-norm input")
    return float(abs(np.vdot(vec, d)) / (nv * nd))


def positive_real_mode(result: SpectrumResult, threshold: float = 1e-6):
    """Eigenpair with the largest real part if that part exceeds ``threshold``.

    Returns ``(eigenvalue, eigenvector)`` or ``None``.
    """
    i = result.leading()
    lam = result.eigenvalues[i]
    if lam.real <= threshold:
        return None
    vec = None if result.eigenvectors is None else result.eigenvectors[:, i]
    return lam, vec
