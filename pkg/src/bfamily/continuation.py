"""Secant predictor / Newton corrector continuation of steady solutions.

Solutions are kept even about ``x = 0`` by working with real cosine
coefficients only: every Newton iterate is expanded in the even subspace, so
odd Fourier modes (and with them the translation direction) never enter.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy import optimize

from .exact import LeftonParams, lefton_eval, lefton_norm_squared, steady_residual
from .spectral import Field, SpectralGrid, derivative, differentiation_matrix

log = logging.getLogger(__name__)


class StopReason(str, Enum):
    REACHED_TARGET = "reached_target"
    STEP_FLOOR = "step_floor"
    NEWTON_FAILURE = "newton_failure"
    MAX_STEPS = "max_steps"


class NewtonFailure(RuntimeError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class ContinuationConfig:
    parameter: str
    initial_step: float = 0.01
    min_step: float = 1e-6
    max_step: float = 0.05
    max_steps: int = 500
    tol: float = 1e-10
    max_newton: int = 25
    growth: float = 1.3

    def __post_init__(self):
        if self.parameter not in ("b", "g"):
            raise ValueError(f"parameter must be 'b' or 'g', got {self.parameter!r}")
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_newton < 1 or self.max_steps < 1:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True, eq=False)
class BranchPoint:
    param: float
    solution: Field
    residual: float
    norm_squared: float
    newton_iterations: int = 0

    @property
    def max_u(self) -> float:
        return float(np.max(self.solution.values))

    @property
    def evenness_defect(self) -> float:
        return evenness_defect(self.solution)


@dataclass
class Branch:
    parameter: str
    points: list = field(default_factory=list)
    stop_reason: StopReason = StopReason.REACHED_TARGET
    fixed: dict = field(default_factory=dict)

    @property
    def params(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    @property
    def last(self) -> BranchPoint:
        return self.points[-1]


# steady system ---------------------------------------------------------------

@dataclass(frozen=True)
class SteadySystem:
    """``c (u'' - u) + (b + 1) u^2/2 + (1 - b) u'^2/2 - u u'' + g = 0``."""

    c: float
    g: float
    b: float

    def residual(self, u: Field) -> np.ndarray:
        return steady_residual(u, self.c, self.g, self.b).values

    def jacobian(self, u: Field) -> np.ndarray:
        grid = u.grid
        D1 = differentiation_matrix(grid, 1)
        D2 = differentiation_matrix(grid, 2)
        v = u.values
        v1 = derivative(u, 1).values
        v2 = derivative(u, 2).values
        J = (self.c - v)[:, None] * D2 + ((1.0 - self.b) * v1)[:, None] * D1
        J[np.diag_indices(grid.num_points)] += -self.c + (self.b + 1.0) * v - v2
        return J


@dataclass(frozen=True)
class Constraint:
    """Scalar equality ``value(u) = 0`` with physical-space gradient."""

    value: Callable
    gradient: Callable


def norm_constraint(target: float = 1.0) -> Constraint:
    return Constraint(
        value=lambda u: u.l2_norm_squared() - target,
        gradient=lambda u: 2.0 * u.grid.spacing * u.values,
    )


def even_synthesis(grid: SpectralGrid) -> np.ndarray:
    """Columns are the grid samples of the real cosine modes."""
    n = grid.num_points
    eye = np.eye(n // 2 + 1)
    return sfft.irfft(eye, n=n, axis=0, norm="forward")


def even_coefficients(u: Field) -> np.ndarray:
    return u.spectrum().real


def evenness_defect(u: Field) -> float:
    """Odd-mode energy relative to the total, via Parseval."""
    c = u.spectrum()
    total = float(np.sum(np.abs(c) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(c.imag**2) / total))


@dataclass
class NewtonResult:
    solution: Field
    iterations: int
    history: list


def newton_correct(guess: Field, system: SteadySystem,
                   constraints: Sequence[Constraint] = (), tol: float = 1e-10,
                   max_iter: int = 25) -> NewtonResult:
    """Newton iteration restricted to even fields, bordered by ``constraints``.

    The error measure is the larger of the residual sup-norm and the
    constraint moduli. Raises :class:`NewtonFailure` when it does not drop
    below ``tol`` within ``max_iter`` iterations.
    """
    grid = guess.grid
    S = even_synthesis(grid)
    a = even_coefficients(guess)
    u = Field(grid, S @ a)
    history = []
    for it in range(max_iter + 1):
        r = system.residual(u)
        cons = np.array([con.value(u) for con in constraints])
        err = max(float(np.max(np.abs(r))), float(np.max(np.abs(cons), initial=0.0)))
        history.append(err)
        if not np.isfinite(err):
            raise NewtonFailure("non-finite residual", history)
        if err <= tol:
            return NewtonResult(u, it, history)
        if it == max_iter:
            break
        rows = [system.jacobian(u) @ S]
        rows += [(con.gradient(u) @ S)[None, :] for con in constraints]
        A = np.vstack(rows)
        rhs = -np.concatenate([r, cons])
        # Minimum-norm least squares: with c = 0 the linearisation degenerates
        # wherever u is negligible, so the far-field directions are numerically
        # singular and must simply be left alone.
        da, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
        if rank == 0:
            raise NewtonFailure("singular bordered system", history)
        a = a + da
        u = Field(grid, S @ a) if np.all(np.isfinite(a)) else None
        if u is None:
            raise NewtonFailure("non-finite iterate", history)
    raise NewtonFailure(f"no convergence in {max_iter} iterations (last error {err:.3e})",
                        history)


# continuation driver -----------------------------------------------------------

def secant_predict(prev: Optional[BranchPoint], cur: BranchPoint, new_param: float) -> Field:
    if prev is None:
        return cur.solution
    s = (new_param - cur.param) / (cur.param - prev.param)
    return Field(cur.solution.grid, cur.solution.values
                 + s * (cur.solution.values - prev.solution.values))


def _continue(seed: Field, p0: float, make_system, constraints, config: ContinuationConfig,
              direction: float, target: float, target_inclusive: bool,
              fixed: dict, accept=None) -> Branch:
    branch = Branch(config.parameter, fixed=dict(fixed))

    def correct(guess, p):
        res = newton_correct(guess, make_system(p), constraints, config.tol, config.max_newton)
        u = res.solution
        if accept is not None and not accept(u):
            raise NewtonFailure("corrector left the branch")
        return BranchPoint(p, u, float(np.max(np.abs(make_system(p).residual(u)))),
                           u.l2_norm_squared(), res.iterations)

    try:
        branch.points.append(correct(seed, p0))
    except NewtonFailure as exc:
        log.warning("seed correction failed: %s", exc)
        branch.stop_reason = StopReason.NEWTON_FAILURE
        return branch

    step = config.initial_step
    streak = 0
    for _ in range(config.max_steps):
        cur = branch.points[-1]
        prev = branch.points[-2] if len(branch.points) > 1 else None
        if np.isclose(cur.param, target, rtol=0, atol=1e-14) and target_inclusive:
            branch.stop_reason = StopReason.REACHED_TARGET
            return branch
        remaining = direction * (target - cur.param)
        new = cur.param + direction * min(step, remaining)
        beyond = direction * (new - target) >= 0 and not target_inclusive
        point = None
        if not beyond:
            try:
                point = correct(secant_predict(prev, cur, new), new)
            except NewtonFailure as exc:
                log.debug("%s=%.8g: %s", config.parameter, new, exc)
        if point is None:
            step *= 0.5
            streak = 0
            if step < config.min_step:
                branch.stop_reason = StopReason.STEP_FLOOR
                return branch
            continue
        branch.points.append(point)
        streak += 1
        if streak >= 2:
            step = min(config.max_step, step * config.growth)
            streak = 0
    branch.stop_reason = StopReason.MAX_STEPS
    return branch


def lefton_seed(grid: SpectralGrid, b: float, norm_squared: float = 1.0) -> Field:
    """Lefton centred at ``x = 0`` scaled to the requested squared norm.

    The amplitude solves ``A^2 * |lefton(1, b)|^2 = norm_squared`` by scalar
    root finding on the quadrature of the closed form.
    """
    unit = lefton_norm_squared(b)
    amp = optimize.brentq(lambda A: A * A * unit - norm_squared, 0.0,
                          10.0 * np.sqrt(norm_squared / unit) + 1.0, xtol=1e-15)
    return Field(grid, lefton_eval(grid.x, LeftonParams(amp, 0.0, b),
                                   period=grid.domain_length))


def lefton_branch(grid: SpectralGrid, b_start: float = -1.2, direction: float = 1.0,
                  config: Optional[ContinuationConfig] = None, b_end: float = -1.0) -> Branch:
    """Normalised even leftons continued in ``b`` towards ``b_end`` (exclusive)."""
    if not b_start < -1:
        raise ValueError("lefton branch must start at b < -1")
    config = config or ContinuationConfig("b", initial_step=0.01, max_step=0.02)
    seed = lefton_seed(grid, b_start)
    return _continue(seed, b_start, lambda b: SteadySystem(0.0, 0.0, b),
                     [norm_constraint(1.0)], config, np.sign(direction), b_end, False,
                     {"c": 0.0, "g": 0.0})


# smooth solitons ---------------------------------------------------------------

def background_root(b: float, c: float, g: float) -> float:
    """Constant state of the solitary wave: smaller root of ``(b+1)k^2/2 - c k + g = 0``."""
    if b == -1:
        return g / c
    disc = c * c - 2.0 * (b + 1.0) * g
    if disc < 0:
        raise ValueError(f"no constant state for b={b}, c={c}, g={g}")
    return (c - np.sqrt(disc)) / (b + 1.0)


def background_decay_rate(b: float, c: float, g: float) -> float:
    """Spatial decay rate ``mu`` of perturbations of the background state."""
    k = background_root(b, c, g)
    mu2 = (c - (b + 1.0) * k) / (c - k)
    if not mu2 > 0:
        raise ValueError("background state is not hyperbolic; no solitary wave")
    return float(np.sqrt(mu2))


def soliton_seed(grid: SpectralGrid, b: float, c: float, g: float) -> Field:
    """Weakly nonlinear solitary wave over the background, centred at ``x = 0``.

    Balancing the linear terms against ``(b+1) w^2/2`` for ``u = k + w`` gives
    ``w = 3 E/(b+1) sech^2(mu x / 2)`` with ``E = c - (b+1) k``.
    """
    k = background_root(b, c, g)
    mu = background_decay_rate(b, c, g)
    E = c - (b + 1.0) * k
    x = (grid.x + 0.5 * grid.domain_length) % grid.domain_length - 0.5 * grid.domain_length
    return Field(grid, k + 3.0 * E / (b + 1.0) / np.cosh(0.5 * mu * x) ** 2)


def soliton_branch_in_g(grid: SpectralGrid, b: float, c: float, g_start: float,
                        g_end: float, config: Optional[ContinuationConfig] = None,
                        seed: Optional[Field] = None, min_height: float = 1e-3) -> Branch:
    """Smooth solitary waves of the steady equation continued in ``g``.

    ``c`` is held fixed. Points whose crest rises less than ``min_height``
    above the background are rejected as collapses onto the constant state.
    """
    config = config or ContinuationConfig("g", initial_step=0.01, max_step=0.02)
    direction = np.sign(g_end - g_start)
    if direction == 0:
        raise ValueError("g_end must differ from g_start")
    seed = seed if seed is not None else soliton_seed(grid, b, c, g_start)

    def accept(u: Field) -> bool:
        v = u.values
        return float(v.max() - v.min()) > min_height

    return _continue(seed, g_start, lambda g: SteadySystem(c, g, b), [], config,
                     direction, g_end, True, {"b": b, "c": c}, accept)


def peakon_shape_distance(u: Field) -> float:
    """Sup-distance between the normalised crest and ``exp(-|x|)``.

    The profile is shifted by its minimum and scaled by its crest height, and
    compared on the window where the peakon shape exceeds 1e-3.
    """
    v = u.values
    w = (v - v.min()) / (v.max() - v.min())
    L = u.grid.domain_length
    i = int(np.argmax(v))
    d = (u.grid.x - u.grid.x[i] + 0.5 * L) % L - 0.5 * L
    ref = np.exp(-np.abs(d))
    mask = ref > 1e-3
    return float(np.max(np.abs(w[mask] - ref[mask])))
