"""Time stepping of the m-formulation, diagnostics, peaks and lefton fits."""

import numpy as np
import pytest

from bfamily.evolution import (
    EvolutionConfig,
    Peak,
    PIController,
    Termination,
    detect_peaks,
    evolve,
    fit_leftons,
    m_rhs,
    positivity_monitor,
    positivity_tolerance,
    refine_peak,
    rkf45_step,
)
from bfamily.exact import BFamilyParams, LeftonParams, gaussian_ic, lefton_eval, peakon_eval, sample
from bfamily.spectral import Field, derivative, helmholtz, make_grid
from bfamily.verify import MONITOR_TOL, RunSpec


@pytest.fixture(scope="module")
def lefton_grid():
    return make_grid(100.0, 1024)


class TestRhs:
    def test_zero(self, lefton_grid):
        assert np.all(m_rhs(Field(lefton_grid, np.zeros(1024)), 0.5).values == 0)

    @pytest.mark.parametrize("b", [-1.5, -2.0, -3.0])
    def test_lefton_is_stationary(self, lefton_grid, b):
        u = sample(lefton_grid, lefton_eval, LeftonParams(1.0, 50.0, b))
        m = helmholtz(u)
        assert np.max(np.abs(m_rhs(m, b).values)) < 1e-7 * np.max(np.abs(m.values))

    def test_small_mode_matches_pointwise(self):
        g = make_grid(2 * np.pi, 64)
        eps, k, b = 1e-6, 3, 0.7
        m = Field.from_function(g, lambda x: eps * np.cos(k * x))
        u = eps * np.cos(k * g.x) / (1 + k * k)
        ux = -eps * k * np.sin(k * g.x) / (1 + k * k)
        mx = -eps * k * np.sin(k * g.x)
        direct = -u * mx - b * ux * m.values
        np.testing.assert_allclose(m_rhs(m, b).values, direct, atol=1e-12 + 10 * eps**2)


class TestFehlberg:
    def test_fifth_order_local_error(self):
        f = lambda y: -y  # noqa: E731
        errs = []
        for h in (0.1, 0.05):
            y4, _ = rkf45_step(f, np.array([1.0]), h)
            errs.append(abs(y4[0] - np.exp(-h)))
        assert np.log2(errs[0] / errs[1]) == pytest.approx(5.0, abs=0.2)

    def test_error_estimate_tracks_true_error(self):
        f = lambda y: y * y  # noqa: E731
        h = 0.05
        y4, err = rkf45_step(f, np.array([1.0]), h)
        true = abs(y4[0] - 1.0 / (1.0 - h))
        assert 0.3 < abs(err[0]) / true < 3.0

    def test_controller_bounds(self):
        c = PIController()
        assert c.accept(0.0) == c.max_factor
        assert c.min_factor <= c.accept(1e6) <= 1.0
        assert c.reject(1e8) == c.min_factor


class TestEvolve:
    def test_config_validation(self, lefton_grid):
        with pytest.raises(ValueError):
            EvolutionConfig(0.5, lefton_grid, -1.0)
        with pytest.raises(ValueError):
            EvolutionConfig(0.5, lefton_grid, 1.0, abs_tol=0.0)

    def test_grid_mismatch(self, lefton_grid):
        u0 = Field(make_grid(50.0, 1024), np.zeros(1024))
        with pytest.raises(ValueError):
            evolve(u0, EvolutionConfig(0.5, lefton_grid, 1.0))

    def test_lefton_stationary(self, lefton_grid):
        u0 = sample(lefton_grid, lefton_eval, LeftonParams(1.0, 50.0, -2.0))
        s = evolve(u0, EvolutionConfig(-2.0, lefton_grid, 100.0, snapshot_interval=50.0))
        assert s.termination is Termination.COMPLETED
        assert s.t_end == pytest.approx(100.0)
        assert np.max(np.abs(s.final.values - u0.values)) < 1e-5

    def test_snapshots_and_mass(self):
        g = make_grid(100.0, 512)
        u0 = sample(g, gaussian_ic, 5.0, 50.0)
        s = evolve(u0, EvolutionConfig(1.5, g, 20.0, snapshot_interval=5.0))
        np.testing.assert_allclose(s.times, [0, 5, 10, 15, 20], atol=1e-9)
        assert np.max(np.abs(s.mass - s.mass[0])) < 1e-12 * s.mass[0]
        assert len(s.fields) == 5
        man = s.manifest()
        assert man["termination_reason"] == "completed" and man["N"] == 512

    def test_reflection_symmetry(self):
        g = make_grid(100.0, 512)
        u0 = sample(g, gaussian_ic, 4.0, 40.0)
        mirror = Field(g, -np.roll(u0.values[::-1], 1))  # -u0(-x) on the periodic grid
        cfg = EvolutionConfig(2.0, g, 10.0, abs_tol=1e-10, rel_tol=1e-10, snapshot_interval=10.0)
        a = evolve(u0, cfg).final.values
        bm = evolve(mirror, cfg).final.values
        np.testing.assert_allclose(-np.roll(bm[::-1], 1), a, atol=1e-8)

    def test_tighter_tolerance_reduces_drift(self):
        from bfamily.verify import lefton_drift

        loose, _ = lefton_drift(1e-5)
        tight, _ = lefton_drift(1e-6)
        assert loose / tight >= 10.0

    def test_step_budget_exhaustion_is_step_failure(self):
        g = make_grid(100.0, 256)
        s = evolve(sample(g, gaussian_ic, 5.0, 50.0), EvolutionConfig(2.0, g, 50.0, max_steps=3))
        assert s.termination is Termination.STEP_FAILURE and s.t_end < 50.0


class TestPositivity:
    def test_negative_value_is_violation(self, lefton_grid):
        v = np.ones(1024)
        v[10] = -1.0
        assert positivity_monitor(Field(lefton_grid, v))

    def test_wide_gaussian_initial_m_passes(self):
        g = make_grid(200.0, 8192)
        m0 = helmholtz(sample(g, gaussian_ic, 10.0, 100.0))
        assert not positivity_monitor(m0, positivity_tolerance(m0))

    def test_tolerance_scale(self, lefton_grid):
        m = Field(lefton_grid, np.full(1024, 4.0))
        assert positivity_tolerance(m) == pytest.approx(4e-10)


class TestPeaks:
    def test_single_peakon(self):
        g = make_grid(200.0, 8192)
        u = sample(g, peakon_eval, 0.0, BFamilyParams(2.0, 1.0), 73.3)
        peaks = detect_peaks(u, 0.5)
        assert len(peaks) == 1
        assert peaks[0].amplitude == pytest.approx(1.0, abs=g.spacing)  # kink: O(dx)
        assert abs(peaks[0].position - 73.3) <= g.spacing

    def test_zero_field(self, lefton_grid):
        assert detect_peaks(Field(lefton_grid, np.zeros(1024)), 1e-3) == []

    def test_min_separation_keeps_taller(self, lefton_grid):
        x = lefton_grid.x
        u = Field(lefton_grid, np.exp(-((x - 40) ** 2)) + 0.5 * np.exp(-((x - 43) ** 2)))
        assert len(detect_peaks(u, 0.1)) == 2
        kept = detect_peaks(u, 0.1, min_separation=5.0)
        assert len(kept) == 1 and kept[0].position == pytest.approx(40.0, abs=0.05)

    def test_lefton_count_ignores_faint_leftons(self, lefton_grid):
        from bfamily.verify import PEAK_REL_HEIGHT, count_leftons

        u = Field(lefton_grid, sum(sample(lefton_grid, lefton_eval, LeftonParams(a, x0, -2.0)).values
                                   for a, x0 in ((1.0, 20.0), (0.3, 40.0), (0.05, 60.0))))
        assert count_leftons(u) == 2
        assert count_leftons(u, PEAK_REL_HEIGHT) == 3

    def test_refine_smooth_peak(self, lefton_grid):
        u = sample(lefton_grid, lefton_eval, LeftonParams(0.7, 31.234, -2.0))
        p = refine_peak(u, Peak(31.2, 0.69))
        assert p.position == pytest.approx(31.234, abs=1e-9)
        assert p.amplitude == pytest.approx(0.7, abs=1e-12)


class TestLeftonFit:
    def test_exact_lefton(self, lefton_grid):
        u = sample(lefton_grid, lefton_eval, LeftonParams(0.4, 47.3, -2.5))
        fits = fit_leftons(u, -2.5)
        assert len(fits) == 1
        assert fits[0].error < 1e-10
        assert fits[0].params.center == pytest.approx(47.3, abs=1e-9)

    def test_two_separated_leftons(self):
        g = make_grid(200.0, 4096)
        a = sample(g, lefton_eval, LeftonParams(0.5, 70.0, -2.0))
        b = sample(g, lefton_eval, LeftonParams(0.2, 130.0, -2.0))
        fits = fit_leftons(a + b, -2.0)
        assert len(fits) == 2
        assert max(f.error for f in fits) < 1e-6

    def test_requires_lefton_regime(self, lefton_grid):
        with pytest.raises(ValueError):
            fit_leftons(Field(lefton_grid, np.ones(1024)), 0.5)


@pytest.mark.slow
class TestLongRuns:
    def test_gaussian_breaks_into_right_moving_peakons(self, run_cache):
        s = run_cache.get(RunSpec("gauss", 2.0, 8192, 400.0, sigma=5.0, x0=50.0, monitor=False))
        assert s.termination is Termination.COMPLETED
        u = s.final
        peaks = detect_peaks(u, 0.05 * float(np.max(u.values)), 2.0)
        assert len(peaks) >= 2
        tallest = max(peaks, key=lambda p: p.amplitude)
        earlier = max(detect_peaks(s.fields[-6], 0.5 * float(np.max(s.fields[-6].values))),
                      key=lambda p: p.amplitude)
        moved = (tallest.position - earlier.position) % 200.0
        assert 0 < moved < 100.0

    def test_ramp_cliff_loses_positivity_before_400(self, run_cache):
        s = run_cache.get(RunSpec("gauss", 0.8, 32768, 400.0, tol=MONITOR_TOL, error_norm="physical"))
        assert s.termination is Termination.POSITIVITY_VIOLATION
        assert s.t_violation < 400.0

    def test_peakon_b2_amplitude_settles(self, run_cache):
        g = make_grid(200.0, 8192)
        u0 = sample(g, peakon_eval, 0.0, BFamilyParams(2.0, 1.0), 50.0)
        s = evolve(u0, EvolutionConfig(2.0, g, 60.0, snapshot_interval=2.0))
        late = s.max_amplitude[s.times >= 10.0]
        assert (late.max() - late.min()) / late.mean() < 0.03


class TestErrorNorm:
    def test_rejects_unknown(self, lefton_grid):
        with pytest.raises(ValueError):
            EvolutionConfig(0.5, lefton_grid, 1.0, error_norm="l2")

    def test_physical_norm_keeps_far_field_noise_below_monitor(self):
        g = make_grid(200.0, 8192)
        u0 = sample(g, gaussian_ic, 10.0, 100.0)
        m0 = helmholtz(u0)
        cfg = EvolutionConfig(0.99, g, 20.0, abs_tol=MONITOR_TOL, rel_tol=MONITOR_TOL,
                              snapshot_interval=20.0, monitor_positivity=True, error_norm="physical")
        s = evolve(u0, cfg)
        assert s.termination is Termination.COMPLETED
        assert s.min_m[-1] > -positivity_tolerance(m0)
