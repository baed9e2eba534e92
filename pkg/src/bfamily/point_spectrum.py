"""Point spectrum of the linearisation about the peakon ``u0 = c exp(-|xi|)``.

On ``xi < 0`` the eigenvalue problem, after applying ``1 - d^2/dxi^2``,
becomes a third-order equation with the explicit solutions ``exp(+-xi)``.
Writing ``t = -xi``, every solution satisfies

    v_tt - v = K Y(t),   Y(t) = (1 - e^-t)^(-b) (e^t - 1)^(-lambda/c),

for a constant ``K``. With ``r3 = 2 - b - lambda/c`` the Frobenius solution
``v_l3 ~ t^r3`` corresponds to ``K = r3 (r3 - 1)`` (``K = -1`` and
``v_l3 ~ -t ln t`` when ``r3 = 1``). The decaying solution with ``F(0) = 0``
is then given by the half-line Green's function,

    F = -K [p + (1 - e^-2t) j / 2],
    p(t) = 1/2 int_0^t (e^-(t-s) - e^-(t+s)) Y(s) ds,
    j(t) = int_t^oo e^-(s-t) Y(s) ds,

evaluated by series for ``t <= t0`` and by an adaptive integrator beyond.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

log = logging.getLogger(__name__)

SERIES_ORDER = 8
HANDOFF = 0.1
LOG_CASE_TOL = 1e-8
NEAR_RESONANT = 1e-4
EDGE_MARGIN = 1e-12
SPACES = ("L2_Cd", "setA", "Hs")


class TailNotConverged(RuntimeError):
    pass


class InsufficientDecay(ValueError):
    pass


class InconclusiveIntegral(RuntimeError):
    pass


# queries and bands ---------------------------------------------------------------

@dataclass(frozen=True)
class SpectralPointQuery:
    lam: complex
    b: float
    c: float = 1.0
    s: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.s is not None and not 1.0 <= self.s < 1.5:
            raise ValueError(f"regularity s must lie in [1, 3/2), got {self.s}")

    @property
    def ratio(self) -> complex:
        return self.lam / self.c


def exponent_r3(q: SpectralPointQuery) -> complex:
    return -q.lam / q.c + 2.0 - q.b


@dataclass(frozen=True)
class BandVerdict:
    member: bool
    space: str
    bound: float
    inclusive: bool

    @property
    def empty(self) -> bool:
        return self.bound <= 0


def band_bound(b: float, c: float, space: str, s: Optional[float] = None) -> float:
    if space == "L2_Cd":
        return c * (2.0 - b)
    if space == "setA":
        return c * (1.0 - b)
    if space == "Hs":
        if s is None or not 1.0 <= s < 1.5:
            raise ValueError("the Hs band needs a regularity 1 <= s < 3/2")
        return c * (2.5 - s - b)
    raise ValueError(f"unknown space {space!r}; expected one of {SPACES}")


def band_membership(q: SpectralPointQuery, space: str, s: Optional[float] = None) -> BandVerdict:
    """Whether ``q.lam`` lies in the instability band of the given space.

    ``L2_Cd``: ``0 < |Re lam| < c(2-b)``; ``setA``: ``0 < |Re lam| <= c(1-b)``;
    ``Hs``: ``0 < |Re lam| < c(5/2 - s - b)``. The inclusive set-A edge is
    resolved with a 1e-12 margin.
    """
    s = q.s if s is None else s
    bound = band_bound(q.b, q.c, space, s)
    re = abs(q.lam.real)
    if space == "setA":
        member = 0 < re <= bound + EDGE_MARGIN
    else:
        member = 0 < re < bound
    return BandVerdict(bool(member and bound > 0), space, bound, space == "setA")


def sobolev_membership(r3: complex, s: Optional[float] = None) -> bool:
    """``H(-xi) F`` in ``H^s``: ``Re r3 >= 1`` for every ``s < 3/2`` when ``s`` is
    None, otherwise ``Re r3 > s - 1/2``."""
    re = complex(r3).real
    if s is None:
        return bool(re >= 1.0 - EDGE_MARGIN)
    return bool(re > s - 0.5)


def tilde_to_plain(c0t: complex, c2t: complex, c: float):
    """Map ``(c0~, c2~)`` to ``(c0, c2) = (c c0~ - c2~, c c0~ + c2~)``."""
    return c * c0t - c2t, c * c0t + c2t


# the half-line equation ---------------------------------------------------------

def source_Y(t, q: SpectralPointQuery):
    """``Y(t) = (1 - e^-t)^(-b) (e^t - 1)^(-lam/c)`` for ``t > 0``."""
    t = np.asarray(t, dtype=float)
    a = q.b + q.ratio
    return np.exp(-a * np.log(-np.expm1(-t)) - q.ratio * t)


def left_residual(v, dv, d2v, d3v, xi, q: SpectralPointQuery):
    """Residual of ``lam (v - v'') + c (v'' - v + b e^xi v + (1-b) e^xi v' - e^xi v'')'``."""
    e = np.exp(xi)
    return (q.lam * (v - d2v)
            + q.c * (d3v - dv + e * (q.b * v + dv - q.b * d2v - d3v)))


def _taylor(func, order: int, radius: float = 1.0) -> np.ndarray:
    """Taylor coefficients at 0 of a function analytic in ``|z| < 2 pi``."""
    m = max(64, 4 * (order + 1))
    z = radius * np.exp(2j * np.pi * np.arange(m) / m)
    coeffs = np.fft.fft(func(z)) / m
    return coeffs[: order + 1] / radius ** np.arange(order + 1)


def _h_factor(q: SpectralPointQuery):
    """``Y(t) t^(2 - r3)``, analytic at ``t = 0`` with value 1."""
    def h(z):
        return np.exp(-q.b * np.log(-np.expm1(-z) / z) - q.ratio * np.log(np.expm1(z) / z))
    return h


@dataclass(frozen=True)
class FrobeniusSeries:
    """Truncated Frobenius solution ``v_l3`` about ``xi = 0^-`` in ``t = -xi``.

    Generic case: ``sum a_n t^(r3+n)``. Logarithmic case (``r3 = 1``):
    ``sum (A_n t^(n+1) ln t + B_n t^(n+1))`` with ``A_0 = -1, B_0 = 0``.
    """

    r3: complex
    K: complex
    a: np.ndarray
    log_case: bool = False
    log_coeffs: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def derivatives(self, t, nderiv: int = 0):
        """Values of ``d^k v_l3 / dt^k`` for ``k = 0..nderiv`` at ``t > 0``."""
        t = np.asarray(t, dtype=float)
        out = [np.zeros(t.shape, dtype=complex) for _ in range(nderiv + 1)]
        lt = np.log(t)
        for n, an in enumerate(self.a):
            e = self.r3 + n if not self.log_case else n + 1.0
            # d^k t^e = e (e-1)...(e-k+1) t^(e-k)
            fall = 1.0 + 0j
            for k in range(nderiv + 1):
                out[k] += an * fall * np.exp((e - k) * lt)
                fall *= (e - k)
            if self.log_case:
                A = self.log_coeffs[n]
                if A == 0:
                    continue
                # d^k [t^e ln t] = t^(e-k) (P_k ln t + Q_k)
                P, Q = 1.0, 0.0
                for k in range(nderiv + 1):
                    out[k] += A * np.exp((e - k) * lt) * (P * lt + Q)
                    P, Q = P * (e - k), Q * (e - k) + P
        return out

    def value(self, t):
        return self.derivatives(t, 0)[0]


def frobenius_series(q: SpectralPointQuery, order: int = SERIES_ORDER) -> FrobeniusSeries:
    r3 = exponent_r3(q)
    if not r3.real > 0:
        raise ValueError(f"Re r3 must be positive, got r3 = {r3}")
    h = _taylor(_h_factor(q), order)
    h[0] = 1.0
    if abs(r3 - 1.0) < LOG_CASE_TOL:
        A = np.zeros(order + 1, dtype=complex)
        B = np.zeros(order + 1, dtype=complex)
        A[0] = -1.0
        for n in range(1, order + 1):
            A[n] = (A[n - 2] if n >= 2 else 0.0) / ((n + 1) * n)
            B[n] = (-h[n] - (2 * n + 1) * A[n] + (B[n - 2] if n >= 2 else 0.0)) / ((n + 1) * n)
        return FrobeniusSeries(1.0 + 0j, -1.0 + 0j, B, True, A)
    if abs(r3 - 1.0) < NEAR_RESONANT:
        warnings.warn(f"r3 = {r3} is close to the logarithmic case; the series is "
                      "ill-conditioned", RuntimeWarning, stacklevel=2)
    K = r3 * (r3 - 1.0)
    a = np.zeros(order + 1, dtype=complex)
    a[0] = 1.0
    for n in range(1, order + 1):
        a[n] = (K * h[n] + (a[n - 2] if n >= 2 else 0.0)) / ((r3 + n) * (r3 + n - 1.0))
    return FrobeniusSeries(r3, K, a)


def _power_integral(coeffs, expo0, lo, hi):
    """``sum_n coeffs[n] int_lo^hi s^(expo0 + n - 1) ds`` for ``0 < lo <= hi``."""
    lo = np.asarray(lo, dtype=float)
    total = np.zeros(lo.shape, dtype=complex)
    for n, cn in enumerate(coeffs):
        if cn == 0:
            continue
        e = expo0 + n
        if abs(e) < 1e-14:
            total += cn * np.log(hi / lo)
        else:
            # (hi^e - lo^e)/e, in expm1 form only where it avoids cancellation
            x = e * np.log(hi / lo)
            small = np.abs(x) < 1.0
            direct = (np.exp(e * np.log(hi)) - np.exp(e * np.log(lo))) / e
            guarded = np.exp(e * np.log(lo)) * np.expm1(np.where(small, x, 0.0)) / e
            total += cn * np.where(small, guarded, direct)
    return total


@dataclass(eq=False)
class OdeSolutionF:
    query: SpectralPointQuery
    r3: complex
    K: complex
    C: complex
    depth: float
    series: FrobeniusSeries
    xi: np.ndarray
    values: np.ndarray
    v_l3_values: np.ndarray
    _p_near: Callable = field(repr=False, default=None)
    _j_near: Callable = field(repr=False, default=None)
    _p_far: object = field(repr=False, default=None)
    _j_far: object = field(repr=False, default=None)
    t0: float = HANDOFF

    def _pj(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = np.zeros(t.shape, dtype=complex)
        j = np.zeros(t.shape, dtype=complex)
        near = (t > 0) & (t <= self.t0)
        far = t > self.t0
        if np.any(t > self.depth * (1 + 1e-12)):
            raise ValueError(f"F is only available on [-{self.depth}, 0]")
        if near.any():
            p[near] = self._p_near(t[near])
            j[near] = self._j_near(t[near])
        if far.any():
            p[far] = self._p_far.sol(t[far])[0]
            j[far] = self._j_far.sol(t[far])[0]
        return t, p, j

    def F_of_t(self, t):
        t, p, j = self._pj(t)
        out = -self.K * (p + 0.5 * (-np.expm1(-2 * t)) * j)
        out[t == 0] = 0.0
        return out

    def dF_of_t(self, t):
        t, p, j = self._pj(t)
        return -self.K * (-p + 0.5 * (1.0 + np.exp(-2 * t)) * j)

    def __call__(self, xi):
        """``F(xi)`` for ``-depth <= xi <= 0``."""
        return self.F_of_t(-np.asarray(xi, dtype=float))

    def derivative(self, xi):
        """``dF/dxi`` for ``-depth <= xi < 0``."""
        return -self.dF_of_t(-np.asarray(xi, dtype=float))

    def v_l3(self, xi):
        t = -np.asarray(xi, dtype=float)
        return self.F_of_t(t) + self.C * (np.exp(t) - np.exp(-t))

    def tail_rate(self) -> float:
        """Decay rate of ``|F|`` fitted on ``[-depth, -depth/2]``."""
        t = np.linspace(0.5 * self.depth, self.depth, 200)
        slope = np.polyfit(t, np.log(np.abs(self.F_of_t(t))), 1)[0]
        return float(-slope)


def _j_tail(T, q: SpectralPointQuery, terms: int = 60):
    """``int_T^oo e^-(s-T) Y(s) ds`` from the binomial series of ``(1 - e^-s)^-a``."""
    a = q.b + q.ratio
    total = 0j
    coef = 1.0 + 0j
    for n in range(terms):
        total += coef * np.exp(-n * T) / (1.0 + q.ratio + n)
        coef *= (a + n) / (n + 1)
    return np.exp(-q.ratio * T) * total


def solve_F(q: SpectralPointQuery, depth: float = 30.0, resolution: int = 4000,
            tail_tol: float = 1e-6, max_depth: float = 2000.0,
            rtol: float = 1e-12) -> OdeSolutionF:
    """Decaying solution of the half-line equation with ``F(0) = 0``.

    The depth is doubled until ``|F(-depth)| < tail_tol * max(1, max|F|)``.
    """
    r3 = exponent_r3(q)
    if not r3.real > 0:
        raise ValueError(f"solve_F requires Re r3 > 0; r3 = {r3} (Re lam >= c(2-b))")
    if not q.lam.real > -q.c:
        raise ValueError("Re lam must exceed -c for the decaying branch to exist")
    series = frobenius_series(q)
    K = series.K
    t0 = HANDOFF
    order = 24

    # near-zero representations of p and j
    h = _h_factor(q)
    sig = _taylor(lambda z: np.sinh(z) * h(z), order)
    sig[0] = 0.0
    eta = _taylor(lambda z: np.exp(-z) * h(z), order)
    expo = r3 - 1.0

    def _p_series(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for n in range(1, order + 1):
            out += sig[n] * np.exp((expo + n) * np.log(t)) / (expo + n)
        return out

    def p_near(t):
        return np.exp(-t) * _p_series(t)

    while True:
        T = depth
        j_T = _j_tail(T, q) if T >= 5 else None
        if j_T is None:
            raise ValueError("depth must be at least 5")
        Yfun = lambda t: source_Y(t, q)  # noqa: E731
        j_sol = integrate.solve_ivp(lambda t, y: y - Yfun(t), (T, t0), [j_T],
                                    method="DOP853", rtol=rtol, atol=1e-300,
                                    dense_output=True)
        p_t0 = np.exp(-t0) * _p_series(np.array([t0]))[0]
        p_sol = integrate.solve_ivp(lambda t, y: -y + 0.5 * (-np.expm1(-2 * t)) * Yfun(t),
                                    (t0, T), [p_t0], method="DOP853", rtol=rtol,
                                    atol=1e-300, dense_output=True)
        if not (j_sol.success and p_sol.success):
            raise RuntimeError("half-line integration failed")
        j_t0 = j_sol.y[0, -1]

        def j_near(t, j_t0=j_t0):
            return np.exp(t) * (np.exp(-t0) * j_t0 + _power_integral(eta, expo, t, t0))

        d = series.derivatives(np.array([t0]), 1)
        C = 0.5 * np.exp(-t0) * (d[0][0] + d[1][0] + K * j_t0)

        tt = np.concatenate([t0 * np.logspace(-12, 0, 200, endpoint=False),
                             np.linspace(t0, T, resolution)])
        sol = OdeSolutionF(q, r3, K, C, T, series, np.zeros(0), np.zeros(0), np.zeros(0),
                           p_near, j_near, p_sol, j_sol, t0)
        Fv = sol.F_of_t(tt)
        scale = max(1.0, float(np.max(np.abs(Fv))))
        if abs(Fv[-1]) < tail_tol * scale:
            xi = -tt[::-1]
            sol.xi = np.concatenate([xi, [0.0]])
            sol.values = np.concatenate([Fv[::-1], [0.0]])
            sol.v_l3_values = np.concatenate([sol.v_l3(xi), [0.0]])
            return sol
        if 2 * depth > max_depth:
            raise TailNotConverged(f"|F(-{depth})| = {abs(Fv[-1]):.3e}; increase the depth")
        depth *= 2


# integrals built on F ------------------------------------------------------------

def _gauss_panels(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes, weights


def _half_line_edges(depth, t0, width, grading=40):
    near = t0 * 2.0 ** -np.arange(grading, -1, -1)
    far = np.linspace(t0, depth, max(2, int(np.ceil((depth - t0) / width)) + 1))
    return np.concatenate([[0.0], near, far[1:]])


@dataclass(frozen=True)
class LemmaIntegral:
    value: complex
    error: float
    tail: float
    nonzero: bool

    @property
    def modulus(self) -> float:
        return abs(self.value)


def _weighted_integral(f, F: OdeSolutionF, width, order):
    edges = _half_line_edges(F.depth, F.t0, width)
    nodes, weights = _gauss_panels(edges, order)
    return complex(np.sum(weights * f(nodes)))


def lemma_integral(F: OdeSolutionF) -> LemmaIntegral:
    """``int_{-depth}^0 e^{2 xi} F dxi`` with a two-resolution error estimate."""
    f = lambda t: np.exp(-2 * t) * F.F_of_t(t.ravel()).reshape(t.shape)  # noqa: E731
    coarse = _weighted_integral(f, F, 0.5, 16)
    fine = _weighted_integral(f, F, 0.25, 24)
    Fd = complex(F.F_of_t(np.array([F.depth]))[0])
    mu = max(F.tail_rate(), 0.0)
    tail = abs(Fd) * np.exp(-2 * F.depth) / (2.0 + mu)
    err = abs(fine - coarse) + 1e-15 * abs(fine)
    nonzero = abs(fine) > 1e3 * (err + tail)
    return LemmaIntegral(fine, err, tail, bool(nonzero))


def w_from_F(F: OdeSolutionF, xi=None):
    """``w = e^xi (F' - F)`` sampled on ``xi`` (default: the stored half-line grid)."""
    xi = F.xi[:-1] if xi is None else np.asarray(xi, dtype=float)
    return xi, np.exp(xi) * (F.derivative(xi) - F(xi))


def w_prime_shape(xi, q: SpectralPointQuery):
    """Closed form of ``w'`` up to a constant: ``e^{(1+lam/c) xi} (1 - e^xi)^-(b + lam/c)``."""
    xi = np.asarray(xi, dtype=float)
    return np.exp((1.0 + q.ratio) * xi - (q.b + q.ratio) * np.log(-np.expm1(xi)))


def w_prime_numeric(F: OdeSolutionF, xi, h: float = 0.01):
    """Eighth-order central differences of ``w`` at interior points."""
    xi = np.asarray(xi, dtype=float)
    st = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    out = np.zeros(xi.shape, dtype=complex)
    for k, wk in zip(range(-4, 5), st):
        if wk:
            out += wk * w_from_F(F, xi + k * h)[1]
    return out / h


def fit_w_prime(F: OdeSolutionF, xi_fit: float = -1.0):
    """Constant ``B`` with ``w' = B * w_prime_shape`` fitted at one interior point."""
    num = w_prime_numeric(F, np.array([xi_fit]))[0]
    return num / w_prime_shape(np.array([xi_fit]), F.query)[0]


def sign_constancy(w, rel_floor: float = 1e-12) -> bool:
    """True when all samples lie in one open half-plane through the origin.

    For real data this is "one sign"; samples below ``rel_floor * max|w|``
    are ignored.
    """
    w = np.asarray(w, dtype=complex)
    mag = np.abs(w)
    keep = mag > rel_floor * mag.max()
    ang = np.sort(np.angle(w[keep]))
    if ang.size < 2:
        return True
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    return bool(2 * np.pi - gaps.max() < np.pi - 1e-12)


def identity_sides(F: OdeSolutionF):
    """``(int e^{2xi} F, int e^{xi} w)`` by the same quadrature."""
    fF = lambda t: np.exp(-2 * t) * F.F_of_t(t.ravel()).reshape(t.shape)  # noqa: E731

    def fw(t):
        x = -t.ravel()
        return (np.exp(x) * w_from_F(F, x)[1]).reshape(t.shape)

    return (_weighted_integral(fF, F, 0.25, 24), _weighted_integral(fw, F, 0.25, 24))


# two-sided functions and the extended operator -----------------------------------

@dataclass(frozen=True)
class TwoSidedFunction:
    """A function continuous away from ``xi = 0`` with one-sided limits there."""

    value: Callable
    derivative: Callable
    v0_minus: complex
    v0_plus: complex

    def __call__(self, xi):
        return self.value(np.asarray(xi, dtype=float))

    def __add__(self, other: "TwoSidedFunction") -> "TwoSidedFunction":
        return TwoSidedFunction(lambda x: self.value(x) + other.value(x),
                                lambda x: self.derivative(x) + other.derivative(x),
                                self.v0_minus + other.v0_minus, self.v0_plus + other.v0_plus)

    def __mul__(self, a) -> "TwoSidedFunction":
        return TwoSidedFunction(lambda x: a * self.value(x), lambda x: a * self.derivative(x),
                                a * self.v0_minus, a * self.v0_plus)

    __rmul__ = __mul__

    def reflect(self) -> "TwoSidedFunction":
        return TwoSidedFunction(lambda x: self.value(-x), lambda x: -self.derivative(-x),
                                self.v0_plus, self.v0_minus)


def peakon_derivative_fn(c: float) -> TwoSidedFunction:
    return TwoSidedFunction(lambda x: -c * np.sign(x) * np.exp(-np.abs(x)),
                            lambda x: c * np.exp(-np.abs(x)), c, -c)


def exp_abs_fn() -> TwoSidedFunction:
    return TwoSidedFunction(lambda x: np.exp(-np.abs(x)),
                            lambda x: -np.sign(x) * np.exp(-np.abs(x)), 1.0, 1.0)


def half_line_fn(F: OdeSolutionF) -> TwoSidedFunction:
    """``H(-xi) F(xi)``; zero beyond the stored depth."""
    def inside(x):
        return (x < 0) & (x >= -F.depth)

    def val(x):
        out = np.zeros(x.shape, dtype=complex)
        m = inside(x)
        out[m] = F(x[m])
        return out

    def der(x):
        out = np.zeros(x.shape, dtype=complex)
        m = inside(x)
        out[m] = F.derivative(x[m])
        return out

    return TwoSidedFunction(val, der, 0.0, 0.0)


@dataclass(frozen=True)
class SampledFunction:
    xi: np.ndarray
    values: np.ndarray


def two_sided_edges(window: float, width: float = 0.5, t0: float = HANDOFF, grading: int = 40):
    half = _half_line_edges(window, t0, width, grading)
    return -half[::-1], half


def _causal(edges, nodes, weights, f, a, start):
    """``R_j = int_{-oo}^{x_j} e^{-a (x_j - s)} f(s) ds`` at the panel edges."""
    out = np.empty(edges.size, dtype=complex)
    out[0] = start
    decay = np.exp(-a * np.diff(edges))
    inc = np.sum(weights * np.exp(-a * (edges[1:, None] - nodes)) * f, axis=1)
    for j in range(1, edges.size):
        out[j] = decay[j - 1] * out[j - 1] + inc[j - 1]
    return out


def _anticausal(edges, nodes, weights, f, a, end):
    """``Q_j = int_{x_j}^{oo} e^{-a (s - x_j)} f(s) ds`` at the panel edges."""
    out = np.empty(edges.size, dtype=complex)
    out[-1] = end
    decay = np.exp(-a * np.diff(edges))
    inc = np.sum(weights * np.exp(-a * (nodes - edges[:-1, None])) * f, axis=1)
    for j in range(edges.size - 2, -1, -1):
        out[j] = decay[j] * out[j + 1] + inc[j]
    return out


def _tail(fx, dfx, a, side):
    """Tail ``int`` of ``e^{-a|s - x|} f`` beyond an edge for exponentially decaying ``f``."""
    if fx == 0:
        return 0.0
    mu = dfx / fx
    denom = a + mu if side == "left" else a - mu
    if not denom.real > 0:
        raise InsufficientDecay("integrand does not decay beyond the window edge")
    return fx / denom


def apply_Lw(v: TwoSidedFunction, q: SpectralPointQuery, window: float = 40.0,
             width: float = 0.5, order: int = 20, decay_tol: float = 1e-6) -> SampledFunction:
    """Quadrature evaluation of the extended operator about ``u0 = c e^{-|xi|}``.

    ``L_w v = c(3-b) [e^xi int_{max(xi,0)}^oo e^{-2s} v - e^-xi int_{-oo}^{min(xi,0)} e^{2s} v]
    - (b/2) phi' * (u0 v) + c(3-b) sgn(xi) e^{-|xi|} ((v0+ + v0-)/2 - v) + ((c - u0) v)'``.

    Returned at the panel edges of a mesh graded towards ``xi = 0`` (which is
    excluded); the left and right limits at 0 are not part of the output.
    """
    c, b = q.c, q.b
    eL, eR = two_sided_edges(window, width)
    nL, wL = _gauss_panels(eL, order)
    nR, wR = _gauss_panels(eR, order)
    vL, vR = v(nL.ravel()).reshape(nL.shape), v(nR.ravel()).reshape(nR.shape)
    scale = max(np.max(np.abs(vL)), np.max(np.abs(vR)), 1e-300)
    edge_vals = v(np.array([-window, window]))
    edge_ders = v.derivative(np.array([-window, window]))
    if np.max(np.abs(edge_vals)) > decay_tol * scale:
        raise InsufficientDecay(f"|v| at the window edge is {np.max(np.abs(edge_vals)):.2e} "
                                f"relative to {scale:.2e}; widen the window")
    u0L, u0R = c * np.exp(nL), c * np.exp(-nR)

    # first line: the two semi-infinite integrals with weight e^{-+2s}
    R2 = _causal(eL, nL, wL, vL, 2.0, _tail(edge_vals[0], edge_ders[0], 2.0, "left"))
    Q2 = _anticausal(eR, nR, wR, vR, 2.0, _tail(edge_vals[1], edge_ders[1], 2.0, "right"))

    # convolution with phi'(x) = -sgn(x) e^{-|x|} over the whole line
    edges = np.concatenate([eL, eR[1:]])
    nodes = np.vstack([nL, nR])
    weights = np.vstack([wL, wR])
    g = np.vstack([u0L * vL, u0R * vR])
    gL0 = c * np.exp(-window) * edge_vals[0]
    gR0 = c * np.exp(-window) * edge_vals[1]
    R1 = _causal(edges, nodes, weights, g, 1.0,
                 _tail(gL0, gL0 * (1.0 + edge_ders[0] / edge_vals[0]) if edge_vals[0] else 0,
                       1.0, "left"))
    Q1 = _anticausal(edges, nodes, weights, g, 1.0,
                     _tail(gR0, gR0 * (-1.0 + edge_ders[1] / edge_vals[1]) if edge_vals[1] else 0,
                           1.0, "right"))
    conv = R1 - Q1  # int sgn(x - s) e^{-|x - s|} g(s) ds

    nl = eL.size - 1  # index of 0 in `edges`
    xi = np.concatenate([eL[:-1], eR[1:]])
    conv = np.concatenate([conv[:nl], conv[nl + 1:]])
    I_left = np.concatenate([np.exp(eL[:-1]) * R2[:-1], np.exp(-eR[1:]) * R2[-1]])
    I_right = np.concatenate([np.exp(eL[:-1]) * Q2[0], np.exp(-eR[1:]) * Q2[1:]])

    vx = v(xi)
    dvx = v.derivative(xi)
    sg = np.sign(xi)
    ex = np.exp(-np.abs(xi))
    avg = 0.5 * (v.v0_plus + v.v0_minus)
    out = (c * (3.0 - b) * (I_right - I_left)
           + 0.5 * b * conv
           + c * (3.0 - b) * sg * ex * (avg - vx)
           + c * sg * ex * vx + c * (1.0 - ex) * dvx)
    return SampledFunction(xi, out)


# discontinuous eigenvectors -------------------------------------------------------

@dataclass(eq=False)
class DiscontinuousEigenvector:
    query: SpectralPointQuery
    c0t: complex
    c1: complex
    c2t: complex
    function: TwoSidedFunction
    F: Optional[OdeSolutionF]
    lemma: Optional[LemmaIntegral]
    residual: float
    samples: SampledFunction
    window: float
    reflected: bool = False

    @property
    def jump(self) -> complex:
        return self.function.v0_plus - self.function.v0_minus

    @property
    def plain_coefficients(self):
        return tilde_to_plain(self.c0t, self.c2t, self.query.c)


def eigen_residual(v: TwoSidedFunction, q: SpectralPointQuery, window: float,
                   **kwargs) -> tuple:
    """``sup|L_w v - lam v| / sup|v|`` over the quadrature edges."""
    Lv = apply_Lw(v, q, window, **kwargs)
    vx = v(Lv.xi)
    r = Lv.values - q.lam * vx
    return float(np.max(np.abs(r)) / np.max(np.abs(vx))), Lv


def default_window(q: SpectralPointQuery, floor: float = 40.0, decay: float = 1e-8) -> float:
    """Window on which ``exp(-Re(lam)/c |xi|)`` drops below ``decay``."""
    re = abs(q.lam.real) / q.c
    if re == 0:
        return floor
    return float(max(floor, np.ceil(-np.log(decay) / min(re, 1.0))))


def construct_eigenvector(q: SpectralPointQuery, window: Optional[float] = None,
                          **kwargs) -> DiscontinuousEigenvector:
    """Assemble ``v_d = u0' + c1 H(-xi) F - lam e^{-|xi|}`` and its residual.

    ``c1 = 2 c2~ lam / (3 c (b - 2) I)`` with ``I = int e^{2 xi} F``. For
    ``Re lam < 0`` the eigenvector of ``-lam`` is reflected.
    """
    if q.b == 2:
        raise ValueError("b = 2 is excluded: the coefficient c1 divides by b - 2")
    if q.lam.real < 0:
        mirror = construct_eigenvector(SpectralPointQuery(-q.lam, q.b, q.c, q.s), window, **kwargs)
        fn = mirror.function.reflect()
        window = mirror.window
        res, Lv = eigen_residual(fn, q, window)
        return DiscontinuousEigenvector(q, mirror.c0t, mirror.c1, mirror.c2t, fn, mirror.F,
                                        mirror.lemma, res, Lv, window, True)
    c0t = 1.0 + 0j
    c2t = -c0t * q.lam
    window = window or default_window(q)
    base = peakon_derivative_fn(q.c) * c0t
    if q.lam == 0:
        fn = base
        F = lemma = None
        c1 = 0j
    else:
        verdict = band_membership(q, "L2_Cd")
        if not verdict.member:
            raise ValueError(f"lambda = {q.lam} is outside the band 0 < |Re lambda| < "
                             f"{verdict.bound:g}")
        F = solve_F(q, depth=window)
        lemma = lemma_integral(F)
        if not lemma.nonzero:
            raise InconclusiveIntegral(f"|I| = {lemma.modulus:.3e} within error "
                                       f"{lemma.error:.3e}")
        c1 = 2.0 * c2t * q.lam / (3.0 * q.c * (q.b - 2.0) * lemma.value)
        fn = base + half_line_fn(F) * c1 + exp_abs_fn() * c2t
    res, Lv = eigen_residual(fn, q, window, **kwargs)
    return DiscontinuousEigenvector(q, c0t, c1, c2t, fn, F, lemma, res, Lv, window)


# Fourier transform of the singular profile ----------------------------------------

def transform_T_closed(r3: complex, w):
    """Transform ``int T(xi) e^{-i w xi} dxi`` of ``T = H(-xi) |xi|^r3 e^xi``."""
    w = np.asarray(w, dtype=float)
    return special.gamma(r3 + 1.0) * np.exp(-(r3 + 1.0) * np.log(1.0 - 1j * w))


def transform_T_numeric(r3: complex, w, depth: float = 60.0, width: float = 0.25,
                        order: int = 24):
    w = np.atleast_1d(np.asarray(w, dtype=float))
    edges = _half_line_edges(depth, HANDOFF, width)
    nodes, weights = _gauss_panels(edges, order)
    t = nodes.ravel()
    base = (weights.ravel() * np.exp(r3 * np.log(t) - t))
    return np.array([np.sum(base * np.exp(1j * wk * t)) for wk in w])
