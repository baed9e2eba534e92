"""Registry of acceptance checks and the runner behind ``bfamily verify``.

Each criterion produces one or more :class:`Check` rows. Failures, including
exceptions raised while computing a criterion, become report entries rather
than crashes. Evolution runs are shared between criteria through a
:class:`RunCache` so that a session computes each one at most once.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import continuation as cont
from . import point_spectrum as ps
from .evolution import EvolutionConfig, SnapshotSeries, Termination, detect_peaks, evolve, fit_leftons
from .exact import BFamilyParams, LeftonParams, gaussian_ic, lefton_eval, peakon_eval, sample
from .spectral import derivative, make_grid
from .stability import (build_linearization, compute_spectrum, derivative_correlation, lefton_domain,
                        positive_real_mode)

log = logging.getLogger(__name__)

# shared run parameters ------------------------------------------------------------

DOMAIN = 200.0
LEFTON_N = 8192
PEAKON_N = 32768
PEAKON_SPEED = 0.031
PEAKON_X0 = 50.0

# the positivity tolerance is 1e-10 max(m0); the integrator's own error must sit
# well below it or truncation noise in the far field trips the monitor. Monitored
# runs also measure the local error pointwise in x, where the monitor looks: a
# per-coefficient bound lets the nodal error grow with sqrt(N).
MONITOR_TOL = 1e-12

SOLITON_C = 1.5
SOLITON_L = 20.0
SOLITON_B = 1.0


@dataclass(frozen=True)
class Check:
    criterion: int
    label: str
    measured: object
    threshold: str
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        m = self.measured
        if isinstance(m, float):
            m = f"{m:.6g}"
        return f"{verdict} criterion {self.criterion} | {self.label} | measured {m} | threshold {self.threshold}"

    def as_dict(self) -> dict:
        m = self.measured
        if isinstance(m, (np.floating, np.integer)):
            m = m.item()
        return {"criterion": self.criterion, "label": self.label, "measured": m,
                "threshold": self.threshold, "passed": bool(self.passed)}


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    run: Callable[["Context"], list]
    fast: bool = False


# evolution runs shared between criteria --------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    kind: str  # "gauss" or "peakon"
    b: float
    N: int
    t_final: float
    sigma: float = 10.0
    x0: float = 100.0
    L: float = DOMAIN
    monitor: bool = True
    tol: float = 1e-8
    snapshot_interval: float = 10.0
    error_norm: str = "spectral"

    def initial(self):
        grid = make_grid(self.L, self.N)
        if self.kind == "gauss":
            return sample(grid, gaussian_ic, self.sigma, self.x0)
        if self.kind == "peakon":
            return sample(grid, peakon_eval, 0.0, BFamilyParams(self.b, PEAKON_SPEED), PEAKON_X0)
        raise ValueError(f"unknown initial condition {self.kind!r}")

    def config(self):
        return EvolutionConfig(self.b, make_grid(self.L, self.N), self.t_final,
                               abs_tol=self.tol, rel_tol=self.tol,
                               snapshot_interval=self.snapshot_interval,
                               monitor_positivity=self.monitor, error_norm=self.error_norm)


class RunCache:
    """Thread-safe memo of evolution runs keyed by :class:`RunSpec`."""

    def __init__(self):
        self._runs: dict = {}
        self._locks: dict = {}
        self._guard = threading.Lock()

    def get(self, spec: RunSpec) -> SnapshotSeries:
        with self._guard:
            lock = self._locks.setdefault(spec, threading.Lock())
        with lock:
            if spec not in self._runs:
                t = time.perf_counter()
                self._runs[spec] = evolve(spec.initial(), spec.config())
                log.info("evolved %s in %.1f s", spec, time.perf_counter() - t)
            return self._runs[spec]

    def completed(self) -> dict:
        with self._guard:
            return {k: v for k, v in self._runs.items() if v.termination is Termination.COMPLETED}


@dataclass
class Context:
    full: bool = False
    cache: RunCache = field(default_factory=RunCache)


def _snapshot_at(series: SnapshotSeries, t: float):
    i = int(np.argmin(np.abs(series.times - t)))
    if abs(series.times[i] - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"no snapshot at t={t}")
    return series.fields[i]


# criterion 1: lefton spectrum -------------------------------------------------------

def lefton_spectrum(A: float = 1.0, b: float = -1.1, N: int = 1024, L: float = DOMAIN):
    L = lefton_domain(b, L)
    grid = make_grid(L, N)
    u0 = sample(grid, lefton_eval, LeftonParams(A, 0.5 * L, b))
    op = build_linearization(u0, 0.0, b)
    return u0, op, compute_spectrum(op, params={"profile": "lefton", "A": A})


def criterion_1(ctx: Context) -> list:
    u0, op, res = lefton_spectrum()
    du = derivative(u0, 1).values
    r_trans = np.linalg.norm(op.apply(du)) / np.linalg.norm(du)
    r_scale = np.linalg.norm(op.apply(u0.values)) / np.linalg.norm(u0.values)
    return [Check(1, "lefton max Re(lambda)", res.max_real_part, "< 1e-6", res.max_real_part < 1e-6),
            Check(1, "|M u0'|/|u0'|", r_trans, "< 1e-8", r_trans < 1e-8),
            Check(1, "|M u0|/|u0|", r_scale, "< 1e-8", r_scale < 1e-8)]


# criterion 2: smooth solitons --------------------------------------------------------

def soliton_config(initial_step: float = 0.005, max_step: float = 0.02):
    return cont.ContinuationConfig("g", initial_step=initial_step, max_step=max_step)


def soliton_at(N: int, g: float, c: float = SOLITON_C, L: float = SOLITON_L,
               b: float = SOLITON_B) -> cont.Branch:
    """Branch from near the small-amplitude limit down to ``g`` (inclusive)."""
    grid = make_grid(L, N)
    return cont.soliton_branch_in_g(grid, b, c, 0.99 * c * c / (2.0 * (b + 1.0)), g, soliton_config())


def soliton_spectra(branch: cont.Branch, c: float = SOLITON_C, b: float = SOLITON_B):
    return [compute_spectrum(build_linearization(p.solution, c, b)).max_real_part
            for p in branch.points]


def instability_threshold(gs, max_re, level: float = 1e-6) -> float:
    """Largest ``g`` below which every branch point has ``max Re > level``.

    Interpolated linearly in ``log10(max Re)`` between the bracketing points.
    """
    gs = np.asarray(gs, dtype=float)
    mr = np.maximum(np.asarray(max_re, dtype=float), 1e-300)
    order = np.argsort(gs)
    gs, mr = gs[order], mr[order]
    unstable = mr > level
    if not unstable[0]:
        raise ValueError("the smallest g on the branch is not unstable")
    k = int(np.argmin(unstable)) if not unstable.all() else gs.size
    if k == gs.size:
        return float(gs[-1])
    la, lb = np.log10(mr[k - 1]), np.log10(mr[k])
    s = (la - np.log10(level)) / (la - lb)
    return float(gs[k - 1] + s * (gs[k] - gs[k - 1]))


def criterion_2(ctx: Context) -> list:
    checks = []
    br = soliton_at(512, 0.5)
    at_half = compute_spectrum(build_linearization(br.last.solution, SOLITON_C, SOLITON_B))
    checks.append(Check(2, "max Re at g=0.5, N=512", at_half.max_real_part, "< 1e-10",
                        at_half.max_real_part < 1e-10))
    thresholds = {}
    for N in (256, 512, 1024):
        br = soliton_at(N, 0.02)
        mr = soliton_spectra(br)
        thresholds[N] = instability_threshold(br.params, mr)
        if N == 512:
            small = br.last
            spec = compute_spectrum(build_linearization(small.solution, SOLITON_C, SOLITON_B),
                                    want_vectors=True)
            mode = positive_real_mode(spec)
            corr = 0.0 if mode is None else derivative_correlation(mode[1], small.solution)
            checks.append(Check(2, f"derivative correlation of unstable mode at g={small.param:.3g}",
                                corr, "> 0.9", corr > 0.9))
    t = [thresholds[N] for N in (256, 512, 1024)]
    mono = t[0] > t[1] > t[2]
    checks.append(Check(2, "g-threshold (N=256, 512, 1024)", ", ".join(f"{v:.4f}" for v in t),
                        "strictly decreasing", mono))
    return checks


# criteria 3 and 4: leftons from Gaussian data ----------------------------------------

LEFTON_COUNTS = {-2.0: 3, -1.5: 2}
# A lefton counts when it stands above 10% of the tallest one. Gaussian data keeps
# shedding ever smaller leftons, so the count depends on this cut; the faint ones
# (above 3%) are reported alongside and are all used by the per-peak fit.
COUNT_REL_HEIGHT = 0.1
PEAK_REL_HEIGHT = 0.03
PEAK_SEPARATION = 5.0


def count_leftons(u, rel_height: float = COUNT_REL_HEIGHT) -> int:
    return len(detect_peaks(u, rel_height * float(np.max(u.values)), PEAK_SEPARATION))


def _count_check(label, u, expected, exact):
    n = count_leftons(u)
    ok = n == expected if exact else abs(n - expected) <= 1
    measured = f"{n} ({count_leftons(u, PEAK_REL_HEIGHT)} above 3%)"
    return Check(3, label, measured, f"== {expected}" if exact else f"{expected} +- 1", ok)


def criterion_3(ctx: Context) -> list:
    checks = []
    t_end = 2500.0 if ctx.full else 600.0
    for b, expected in LEFTON_COUNTS.items():
        series = ctx.cache.get(RunSpec("gauss", b, LEFTON_N, t_end, sigma=10.0, x0=100.0,
                                       monitor=False))
        checks.append(_count_check(f"lefton count at t=600, b={b}",
                                   _snapshot_at(series, 600.0), expected, exact=False))
        if ctx.full:
            checks.append(_count_check(f"lefton count at t=2500, b={b}", series.final,
                                       expected, exact=True))
    return checks


def criterion_4(ctx: Context) -> list:
    series = ctx.cache.get(RunSpec("gauss", -2.5, LEFTON_N, 2500.0, sigma=7.0, x0=100.0,
                                   monitor=False))
    fits = fit_leftons(series.final, -2.5, min_height=PEAK_REL_HEIGHT * float(np.max(series.final.values)),
                       min_separation=PEAK_SEPARATION)
    worst = max((f.error for f in fits), default=np.inf)
    return [Check(4, f"worst per-peak lefton mismatch ({len(fits)} peaks)", worst, "< 1e-2",
                  bool(fits) and worst < 1e-2)]


# criteria 5-7: peakons and positivity -------------------------------------------------

def peak_position(u) -> float:
    peaks = detect_peaks(u, 0.5 * float(np.max(u.values)))
    return max(peaks, key=lambda p: p.amplitude).position


def criterion_5(ctx: Context) -> list:
    series = ctx.cache.get(RunSpec("peakon", 1.5, PEAKON_N, 300.0))
    t = series.times[-1]
    pos = peak_position(series.final)
    expected = PEAKON_X0 + PEAKON_SPEED * t
    rel = abs(pos - expected) / expected
    late = series.max_amplitude[series.times >= 50.0]
    drift = float((late.max() - late.min()) / late.mean())
    return [Check(5, f"peak position at t={t:g} (expected {expected:.3f})", rel, "< 0.02",
                  series.termination is Termination.COMPLETED and rel < 0.02),
            Check(5, "amplitude drift for t >= 50", drift, "< 0.03", drift < 0.03)]


def criterion_6(ctx: Context) -> list:
    # Monotonicity is judged on the snapshot record (every 10 time units): the
    # per-step nodal maximum of a kinked profile jitters by O(dx) as the crest
    # crosses grid points, which would mask any genuine trend.
    checks = []
    for b in (0.88, 0.98):
        series = ctx.cache.get(RunSpec("peakon", b, PEAKON_N, 250.0))
        keep = series.times >= 20.0
        t, amp = series.times[keep], series.max_amplitude[keep]
        mono = bool(amp.size > 1 and np.all(np.diff(amp) >= 0))
        t_top = float(t[int(np.argmax(amp))])
        stopped = series.termination is not Termination.COMPLETED and series.t_end < 250.0
        checks.append(Check(6, f"b={b}: amplitude non-decreasing after t=20",
                            f"{mono} (max {amp.max():.5g} at t={t_top:g})", "true", mono))
        checks.append(Check(6, f"b={b}: termination", f"{series.termination.value} at t={series.t_end:.4g}",
                            "step_failure or positivity_violation before t=250", stopped))
    return checks


def criterion_7(ctx: Context) -> list:
    series = ctx.cache.get(RunSpec("gauss", 0.99, PEAKON_N, 400.0, sigma=10.0, x0=100.0,
                                   tol=MONITOR_TOL, error_norm="physical"))
    tv = series.t_violation
    ok = tv is not None and 230.0 <= tv <= 350.0
    return [Check(7, "positivity violation time", float("nan") if tv is None else tv,
                  "in [230, 350]", ok)]


# criteria 8 and 9: point spectrum ------------------------------------------------------

def criterion_8(ctx: Context) -> list:
    b, c = 0.5, 1.0
    checks = []
    swept = (0.1, 0.2, 0.3, 0.4)
    for re in swept:
        q = ps.SpectralPointQuery(re, b, c)
        ev = ps.construct_eigenvector(q)
        in_a = ps.band_membership(q, "setA").member
        checks.append(Check(8, f"v_d residual at lambda={re}", ev.residual, "< 1e-6",
                            ev.residual < 1e-6 and in_a))
    member = {re: ps.sobolev_membership(ps.exponent_r3(ps.SpectralPointQuery(re, b, c)))
              for re in swept + (0.6,)}
    ok = all(member[re] for re in swept) and not member[0.6]
    checks.append(Check(8, "sobolev membership on {0.1..0.4} / at 0.6",
                        f"{[member[r] for r in swept]} / {member[0.6]}", "all true / false", ok))
    failures = []
    for re in (1.5, 1.7):
        try:
            ps.solve_F(ps.SpectralPointQuery(re, b, c))
            failures.append(False)
        except ValueError:
            failures.append(True)
    checks.append(Check(8, "solve_F rejects Re lambda in {1.5, 1.7}", failures, "all rejected",
                        all(failures)))
    return checks


LEMMA_GRID_B = (-1.0, 0.0, 0.5)
LEMMA_GRID_LAM = (0.2, 0.5, 0.2 + 0.3j)
IDENTITY_FACTOR = -1.5


def criterion_9(ctx: Context) -> list:
    nonzero, constant, worst = [], [], 0.0
    for b in LEMMA_GRID_B:
        for lam in LEMMA_GRID_LAM:
            q = ps.SpectralPointQuery(lam, b, 1.0)
            if not ps.exponent_r3(q).real > 0:
                continue
            F = ps.solve_F(q)
            nonzero.append(ps.lemma_integral(F).nonzero)
            constant.append(ps.sign_constancy(ps.w_from_F(F)[1]))
            i_f, i_w = ps.identity_sides(F)
            worst = max(worst, abs(IDENTITY_FACTOR * i_f - i_w) / max(abs(i_w), 1e-300))
    return [Check(9, "lemma integral nonzero", f"{sum(nonzero)}/{len(nonzero)}", "all",
                  all(nonzero)),
            Check(9, "sign constancy of w", f"{sum(constant)}/{len(constant)}", "all", all(constant)),
            Check(9, "identity -(3/2) int e^{2xi}F = int e^xi w (relative)", worst, "< 1e-8",
                  worst < 1e-8)]


# criterion 10: conservation and tolerance response ----------------------------------------

def lefton_drift(tol: float, b: float = -2.0, t_final: float = 40.0, N: int = 1024,
                 L: float = 100.0) -> tuple:
    grid = make_grid(L, N)
    u0 = sample(grid, lefton_eval, LeftonParams(1.0, 0.5 * L, b))
    series = evolve(u0, EvolutionConfig(b, grid, t_final, abs_tol=tol, rel_tol=tol,
                                        snapshot_interval=t_final))
    drift = float(np.max(np.abs(series.final.values - u0.values)) / np.max(u0.values))
    return drift, series


def mass_error(series: SnapshotSeries) -> float:
    m = np.asarray(series.mass)
    return float(np.max(np.abs(m - m[0])) / max(abs(m[0]), 1e-300))


def criterion_10(ctx: Context) -> list:
    loose, s1 = lefton_drift(1e-5)
    tight, s2 = lefton_drift(1e-6)
    ratio = loose / max(tight, 1e-300)
    runs = [s1, s2] + list(ctx.cache.completed().values())
    worst = max(mass_error(s) for s in runs)
    return [Check(10, f"relative mass error over {len(runs)} completed runs", worst, "< 1e-8",
                  worst < 1e-8),
            Check(10, f"lefton drift ratio for 10x tolerance ({loose:.3g} / {tight:.3g})", ratio,
                  ">= 10", ratio >= 10.0)]


# criterion 11: lefton continuation ---------------------------------------------------------

def criterion_11(ctx: Context) -> list:
    br = cont.lefton_branch(make_grid(DOMAIN, 512), -1.2)
    b_star = br.last.param
    res = max(p.residual for p in br.points)
    even = max(p.evenness_defect for p in br.points)
    norm = max(abs(p.norm_squared - 1.0) for p in br.points)
    return [Check(11, f"terminal b* ({br.stop_reason.value})", b_star, "in (-1.2, -1)",
                  -1.2 < b_star < -1.0),
            Check(11, "max branch residual", res, "< 1e-10", res < 1e-10),
            Check(11, "max evenness defect", even, "< 1e-10", even < 1e-10),
            Check(11, "max | |u|^2 - 1 |", norm, "< 1e-10", norm < 1e-10)]


CRITERIA = {c.number: c for c in [
    Criterion(1, "lefton spectrum", criterion_1),
    Criterion(2, "smooth-soliton spectrum", criterion_2),
    Criterion(3, "lefton emergence", criterion_3),
    Criterion(4, "lefton fit", criterion_4),
    Criterion(5, "peakon robustness for b > 1", criterion_5),
    Criterion(6, "peakon instability for b < 1", criterion_6),
    Criterion(7, "positivity monitor", criterion_7),
    Criterion(8, "point-spectrum band", criterion_8, fast=True),
    Criterion(9, "lemma integral and w identity", criterion_9, fast=True),
    Criterion(10, "conservation and order", criterion_10, fast=True),
    Criterion(11, "continuation contract", criterion_11),
]}

SELECTORS = ("fast", "desk", "all")


def select(selector: str) -> tuple:
    """Resolve a selector to ``(criterion numbers, full_scale)``.

    ``fast`` runs the sub-minute criteria, ``desk`` every criterion at desk
    scale, ``all`` additionally the full-scale lefton counts. A comma list of
    criterion numbers runs those at desk scale.
    """
    if selector == "fast":
        return tuple(n for n, c in CRITERIA.items() if c.fast), False
    if selector in ("desk", "all"):
        return tuple(CRITERIA), selector == "all"
    try:
        numbers = tuple(int(s) for s in selector.split(","))
    except ValueError:
        raise ValueError(f"unknown suite {selector!r}; expected one of {SELECTORS} "
                         f"or criterion numbers such as '1,8'") from None
    unknown = [n for n in numbers if n not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criteria {unknown}; valid numbers are 1-{len(CRITERIA)}")
    return numbers, False


def run_criterion(number: int, ctx: Context) -> list:
    crit = CRITERIA[number]
    t = time.perf_counter()
    try:
        checks = crit.run(ctx)
    except Exception as exc:  # noqa: BLE001 - failures become report rows
        log.exception("criterion %d raised", number)
        checks = [Check(number, crit.title, f"error: {type(exc).__name__}: {exc}", "no error", False)]
    log.info("criterion %d took %.1f s", number, time.perf_counter() - t)
    return checks


def verify(selector: str = "fast", threads: int = 1, ctx: Optional[Context] = None) -> list:
    numbers, full = select(selector)
    ctx = ctx or Context(full=full)
    # conservation inspects whatever runs the other criteria produced, so it goes last
    first = [n for n in numbers if n != 10]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = dict(zip(first, pool.map(lambda n: run_criterion(n, ctx), first)))
    if 10 in numbers:
        results[10] = run_criterion(10, ctx)
    return [chk for n in numbers for chk in results[n]]
