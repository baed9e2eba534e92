"""Adaptive time stepping of the m-formulation with run diagnostics.

The state is the truncated Fourier spectrum of ``m = u - u_xx``; each
right-hand side evaluation recovers ``u`` by Helmholtz inversion and forms
both quadratic products on the 3/2-extended grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .exact import LeftonParams, lefton_eval
from .spectral import Field, SpectralGrid, helmholtz

log = logging.getLogger(__name__)


class Termination(str, Enum):
    COMPLETED = "completed"
    POSITIVITY_VIOLATION = "positivity_violation"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class EvolutionConfig:
    b: float
    grid: SpectralGrid
    t_final: float
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    snapshot_interval: float = 10.0
    monitor_positivity: bool = False
    step_floor: float = 1e-12
    initial_step: float = 1e-3
    max_steps: int = 10_000_000
    error_norm: str = "spectral"

    def __post_init__(self):
        if self.error_norm not in ("spectral", "physical"):
            raise ValueError("error_norm must be 'spectral' or 'physical'")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.snapshot_interval > 0:
            raise ValueError("snapshot_interval must be positive")


@dataclass
class SnapshotSeries:
    """Snapshots of ``u`` with per-snapshot diagnostics."""

    grid: SpectralGrid
    b: float
    times: np.ndarray
    fields: list
    mass: np.ndarray
    max_amplitude: np.ndarray
    min_m: np.ndarray
    termination: Termination
    t_violation: Optional[float] = None
    t_end: float = 0.0
    accepted_steps: int = 0
    rejected_steps: int = 0
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    # fine-grained amplitude history (one entry per accepted step)
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_max_amplitude: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def m(self, i: int) -> Field:
        return helmholtz(self.fields[i])

    def manifest(self) -> dict:
        return {
            "b": self.b,
            "N": self.grid.num_points,
            "L": self.grid.domain_length,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "termination_reason": self.termination.value,
            "t0_violation": self.t_violation,
            "t_end": self.t_end,
            "accepted_steps": self.accepted_steps,
            "rejected_steps": self.rejected_steps,
        }


# right-hand side -----------------------------------------------------------

def _rhs_coeffs(mhat: np.ndarray, b: float, grid: SpectralGrid) -> np.ndarray:
    uhat = mhat / (1.0 + grid.k**2)
    ik = 1j * grid.k_odd
    u = grid.to_padded(uhat)
    ux = grid.to_padded(ik * uhat)
    m = grid.to_padded(mhat)
    mx = grid.to_padded(ik * mhat)
    return grid.from_padded(-u * mx - b * ux * m)


def m_rhs(m: Field, b: float) -> Field:
    """``-u m_x - b u_x m`` with ``u = (1 - d_xx)^-1 m``, products dealiased."""
    return Field.from_spectrum(m.grid, _rhs_coeffs(m.spectrum(), b, m.grid))


# Fehlberg 4(5) -------------------------------------------------------------

_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_E = tuple(b5 - b4 for b4, b5 in zip(_B4, _B5))


def rkf45_step(f, y, h):
    """One Fehlberg step; returns the 4th-order update and the error vector."""
    ks = []
    for row in _A:
        yi = y
        for a, k in zip(row, ks):
            if a:
                yi = yi + (h * a) * k
        ks.append(f(yi))
    y4 = y + h * sum(bj * k for bj, k in zip(_B4, ks) if bj)
    err = h * sum(ej * k for ej, k in zip(_E, ks) if ej)
    return y4, err


class PIController:
    """Step-size controller with PI error feedback (exponents 0.7/5, 0.4/5)."""

    alpha = 0.7 / 5
    beta = 0.4 / 5
    safety = 0.9
    min_factor = 0.2
    max_factor = 5.0

    def __init__(self):
        self.prev_err = 1.0

    def accept(self, err: float) -> float:
        if err == 0.0:
            fac = self.max_factor
        else:
            fac = self.safety * err ** (-self.alpha) * self.prev_err**self.beta
        self.prev_err = max(err, 1e-4)
        return min(self.max_factor, max(self.min_factor, fac))

    def reject(self, err: float) -> float:
        return max(self.min_factor, self.safety * err ** (-1 / 5))


# driver --------------------------------------------------------------------

def positivity_tolerance(m0: Field) -> float:
    return 1e-10 * float(np.max(m0.values))


def positivity_monitor(m: Field, tol_m: float = 0.0) -> bool:
    """True when ``min m < -tol_m``."""
    return bool(np.min(m.values) < -tol_m)


def evolve(u0: Field, config: EvolutionConfig) -> SnapshotSeries:
    grid = u0.grid
    if grid != config.grid:
        raise ValueError("initial field and config use different grids")
    b = config.b
    f = lambda y: _rhs_coeffs(y, b, grid)  # noqa: E731

    mhat = (1.0 + grid.k**2) * u0.spectrum()
    mhat[-1] = 0.0

    m0 = Field.from_spectrum(grid, mhat)
    tol_m = positivity_tolerance(m0)
    monitor = config.monitor_positivity
    if monitor and positivity_monitor(m0, tol_m):
        log.warning("initial m is not positive (min %.3e); positivity monitor disabled",
                    float(m0.values.min()))
        monitor = False

    times, fields, mass, umax, mmin = [], [], [], [], []
    step_t, step_amp = [0.0], [float(np.max(u0.values))]

    def record(t, mh):
        uh = mh / (1.0 + grid.k**2)
        u = grid.inverse(uh)
        times.append(t)
        fields.append(Field(grid, u))
        mass.append(float(uh[0].real) * grid.domain_length)
        umax.append(float(np.max(u)))
        mmin.append(float(np.min(grid.inverse(mh))))

    record(0.0, mhat)
    t = 0.0
    h = config.initial_step
    ctrl = PIController()
    n_acc = n_rej = 0
    reason = Termination.COMPLETED
    t_viol = None
    next_out = config.snapshot_interval
    eps = 1e-12 * config.t_final
    physical = config.error_norm == "physical"

    while t < config.t_final - eps:
        if n_acc + n_rej >= config.max_steps:
            reason = Termination.STEP_FAILURE
            break
        target = min(next_out, config.t_final)
        h_try = min(h, target - t)
        y, err = rkf45_step(f, mhat, h_try)
        if physical:
            e_x = grid.inverse(err)
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(grid.inverse(mhat)),
                                                                 np.abs(grid.inverse(y)))
            en = float(np.max(np.abs(e_x) / scale))
        else:
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(mhat), np.abs(y))
            en = float(np.max(np.abs(err) / scale))
        if not np.isfinite(en):
            reason = Termination.STEP_FAILURE
            break
        if en <= 1.0:
            t += h_try
            mhat = y
            n_acc += 1
            fac = ctrl.accept(en)
            # a step clipped to an output time does not shrink the proposal
            h = max(h, h_try * fac) if h_try < h else h_try * fac
            step_t.append(t)
            step_amp.append(float(np.max(grid.inverse(mhat / (1.0 + grid.k**2)))))
            if monitor and positivity_monitor(Field.from_spectrum(grid, mhat), tol_m):
                reason = Termination.POSITIVITY_VIOLATION
                t_viol = t
                record(t, mhat)
                break
            if t >= target - eps:
                record(t, mhat)
                if target == next_out:
                    next_out += config.snapshot_interval
        else:
            n_rej += 1
            h = h_try * ctrl.reject(en)
        if h < config.step_floor:
            reason = Termination.STEP_FAILURE
            break

    if reason is not Termination.COMPLETED and times[-1] != t and np.all(np.isfinite(mhat)):
        record(t, mhat)
    log.info("evolve b=%g N=%d: %s at t=%.4g after %d steps (%d rejected)",
             b, grid.num_points, reason.value, t, n_acc, n_rej)

    return SnapshotSeries(
        grid=grid, b=b, times=np.array(times), fields=fields,
        mass=np.array(mass), max_amplitude=np.array(umax), min_m=np.array(mmin),
        termination=reason, t_violation=t_viol, t_end=t,
        accepted_steps=n_acc, rejected_steps=n_rej,
        abs_tol=config.abs_tol, rel_tol=config.rel_tol,
        step_times=np.array(step_t), step_max_amplitude=np.array(step_amp),
    )


# peaks and lefton fitting --------------------------------------------------

@dataclass(frozen=True)
class Peak:
    position: float
    amplitude: float


def detect_peaks(u: Field, min_height: float, min_separation: float = 0.0) -> list:
    """Periodic local maxima above ``min_height``, parabolically refined.

    Peaks closer than ``min_separation`` to a taller one are dropped.
    Returned in order of position.
    """
    if not min_height > 0:
        raise ValueError("min_height must be positive")
    v = u.values
    grid = u.grid
    left, right = np.roll(v, 1), np.roll(v, -1)
    idx = np.flatnonzero((v > left) & (v >= right) & (v > min_height))
    peaks = []
    for i in idx:
        ym, y0, yp = left[i], v[i], right[i]
        denom = ym - 2 * y0 + yp
        d = 0.5 * (ym - yp) / denom if denom < 0 else 0.0
        amp = y0 - 0.25 * (ym - yp) * d
        pos = (grid.x[i] + d * grid.spacing) % grid.domain_length
        peaks.append(Peak(float(pos), float(amp)))
    peaks.sort(key=lambda p: -p.amplitude)
    kept = []
    L = grid.domain_length
    for p in peaks:
        if all(abs((p.position - q.position + L / 2) % L - L / 2) >= min_separation for q in kept):
            kept.append(p)
    return sorted(kept, key=lambda p: p.position)


def _interp_derivs(coeffs, grid, x):
    """Value, first and second derivative of the trigonometric interpolant at x."""
    n = np.arange(coeffs.size)
    w = np.full(coeffs.size, 2.0)
    w[0] = 1.0
    w[-1] = 0.0  # Nyquist is dropped so derivatives stay real
    k = grid.k
    e = coeffs * w * np.exp(1j * k * x)
    return (float(np.real(e.sum())), float(np.real((1j * k * e).sum())),
            float(np.real((-(k**2) * e).sum())))


def refine_peak(u: Field, peak: Peak, iterations: int = 20) -> Peak:
    """Polish a peak with Newton's method on the spectral interpolant."""
    coeffs = u.spectrum()
    x = peak.position
    for _ in range(iterations):
        _, d1, d2 = _interp_derivs(coeffs, u.grid, x)
        if d2 >= 0:
            break
        dx = -d1 / d2
        x += dx
        if abs(dx) < 1e-14 * max(1.0, abs(x)):
            break
    val, _, _ = _interp_derivs(coeffs, u.grid, x)
    return Peak(float(x % u.grid.domain_length), val)


@dataclass(frozen=True)
class LeftonFit:
    params: LeftonParams
    error: float
    window: tuple


def fit_leftons(u: Field, b: float, min_height: Optional[float] = None,
                min_separation: float = 1.0, max_window: float = 15.0) -> list:
    """Match each detected peak with the lefton of the same height and centre.

    The mismatch is the sup-norm of ``u - lefton`` over a window of half-width
    ``min(max_window, half the distance to the nearest other peak)``.
    """
    if not b < -1:
        raise ValueError("lefton fitting requires b < -1")
    if min_height is None:
        min_height = 0.1 * float(np.max(u.values))
    peaks = detect_peaks(u, min_height, min_separation)
    if not peaks:
        raise ValueError("no peaks found")
    grid = u.grid
    L = grid.domain_length
    fits = []
    for i, raw in enumerate(peaks):
        p = refine_peak(u, raw)
        others = [abs((raw.position - q.position + L / 2) % L - L / 2)
                  for j, q in enumerate(peaks) if j != i]
        half = min([max_window] + [0.5 * d for d in others])
        params = LeftonParams(p.amplitude, p.position, b)
        d = (grid.x - p.position + L / 2) % L - L / 2
        mask = np.abs(d) <= half
        model = lefton_eval(grid.x, params, period=L)
        err = float(np.max(np.abs(u.values[mask] - model[mask])))
        fits.append(LeftonFit(params, err, (p.position - half, p.position + half)))
    return fits
