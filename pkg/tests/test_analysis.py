import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from uavnet import analysis
from uavnet.analysis import (coverage_lowfreq, coverage_mmwave,
                             coverage_mmwave_rayleigh, coverage_total,
                             laplace_lowfreq, laplace_mmwave,
                             laplace_mmwave_derivative, log_moment_kernel,
                             per_user_rate, se_lowfreq, se_mmwave)
from uavnet.antenna import UpaPattern
from uavnet.bands import db_to_linear
from uavnet.geometry import ServingDistanceDist, serving_ppf
from uavnet.quadrature import QuadratureSpec

H = 50.0


def _coverage_scale(cfg, pattern=None):
    gain = pattern.gain_main if pattern is not None else 1.0
    return cfg.tx_power_w * gain * cfg.pathloss_const


class TestLogMomentKernel:
    def test_reference_points_shape_two(self):
        assert log_moment_kernel(1.0, 2) == pytest.approx(0.75, rel=1e-15)
        assert log_moment_kernel(1e-8, 2) == pytest.approx(2.0, abs=1e-6)
        assert log_moment_kernel(0.0, 2) == 2.0

    def test_matches_algebraic_form_shape_two(self):
        z = np.geomspace(1e-12, 1e6, 200)
        expected = (2.0 + z) / (1.0 + z) ** 2
        np.testing.assert_allclose(log_moment_kernel(z, 2), expected,
                                   rtol=1e-13)

    def test_small_argument_series(self):
        # (1 - (1+z)^-2)/z = 2 - 3 z + O(z^2)
        for z in (1e-5, 1e-4, 1e-3):
            assert log_moment_kernel(z, 2) == pytest.approx(2.0 - 3.0 * z,
                                                            rel=1e-5)

    def test_shape_one_is_rayleigh_weight(self):
        z = np.linspace(0.1, 50.0, 40)
        np.testing.assert_allclose(log_moment_kernel(z, 1), 1.0 / (1.0 + z),
                                   rtol=1e-13)

    def test_limit_equals_shape(self):
        for m in (1, 2, 3, 5):
            assert log_moment_kernel(0.0, m) == float(m)
            assert log_moment_kernel(1e-14, m) == pytest.approx(float(m),
                                                                rel=1e-9)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            log_moment_kernel(-0.5, 2)


class TestLaplaceLowfreq:
    def test_unit_at_zero(self, band_lf):
        assert laplace_lowfreq(0.0, 100.0, band_lf) == 1.0

    def test_distant_exclusion_tends_to_one(self, band_lf):
        assert laplace_lowfreq(1e6, 5e5, band_lf) == pytest.approx(1.0,
                                                                   abs=1e-3)

    def test_monotone_in_s_and_r(self, band_lf):
        values = [laplace_lowfreq(s, 150.0, band_lf)
                  for s in (1e8, 1e9, 1e10)]
        assert all(b < a for a, b in zip(values, values[1:]))
        values = [laplace_lowfreq(2e9, r, band_lf)
                  for r in (60.0, 150.0, 400.0)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert all(0.0 < v <= 1.0 for v in values)

    def test_exponent_against_scipy(self, band_lf):
        r, s = 150.0, 2e9
        spk = s * band_lf.tx_power_w * band_lf.pathloss_const
        alpha = band_lf.pathloss_exp
        # Integrate in w = 1/z to keep scipy on a finite interval.
        ref, _ = quad(
            lambda w: (1.0 / w) / (1.0 + w ** -alpha / spk) / (w * w),
            0.0, 1.0 / r, epsabs=1e-13, epsrel=1e-12, limit=200)
        expected = math.exp(-2.0 * math.pi * band_lf.uav_density * ref)
        assert laplace_lowfreq(s, r, band_lf) == pytest.approx(expected,
                                                               rel=1e-8)

    def test_rejects_nakagami_band(self, band_mm):
        with pytest.raises(ValueError):
            laplace_lowfreq(1.0, 100.0, band_mm)


class TestLaplaceMmwave:
    def test_unit_at_zero(self, band_mm, pattern64):
        assert laplace_mmwave(0.0, 60.0, band_mm, H, pattern64) == 1.0

    def test_monotone(self, band_mm, pattern64):
        values = [laplace_mmwave(s, 55.0, band_mm, H, pattern64)
                  for s in (1e8, 1e9, 1e10)]
        assert all(b < a for a, b in zip(values, values[1:]))
        values = [laplace_mmwave(3e9, r, band_mm, H, pattern64)
                  for r in (51.0, 60.0, 90.0)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_degenerate_gains_collapse(self, band_mm):
        # Equal main and side gains reduce the gain mixture to a single
        # deterministic gain; compare against an independent evaluation.
        gain = 2.0
        pattern = UpaPattern(n_antennas=4, bw_azimuth=0.4, bw_elevation=0.4,
                             gain_main=gain, gain_side=gain)
        s, r = 5e9, 60.0
        m = band_mm.nakagami_m
        c = band_mm.tx_power_w * gain * band_mm.pathloss_const / m
        # Substituted w = 1/z so scipy works on a finite interval.
        ref, _ = quad(
            lambda w: (1.0 - (1.0 + s * c * w ** 3.0) ** -m) / w ** 3,
            0.0, 1.0 / r, epsabs=1e-14, epsrel=1e-12, limit=200)
        expected = math.exp(-2.0 * math.pi * band_mm.uav_density * ref)
        got = laplace_mmwave(s, r, band_mm, H, pattern)
        assert got == pytest.approx(expected, rel=1e-8)


class TestLaplaceDerivatives:
    def test_order_zero_is_transform(self, band_mm, pattern64):
        s, r = 3e9, 55.0
        assert laplace_mmwave_derivative(
            0, s, r, band_mm, H, pattern64) == laplace_mmwave(
                s, r, band_mm, H, pattern64)

    def test_first_order_is_negative(self, band_mm, pattern64):
        assert laplace_mmwave_derivative(1, 3e9, 55.0, band_mm, H,
                                         pattern64) < 0.0

    def test_order_bounds(self, band_mm, pattern64):
        with pytest.raises(ValueError):
            laplace_mmwave_derivative(band_mm.nakagami_m, 1e9, 55.0,
                                      band_mm, H, pattern64)
        with pytest.raises(ValueError):
            laplace_mmwave_derivative(-1, 1e9, 55.0, band_mm, H, pattern64)

    def test_against_finite_differences(self, band_mm, pattern64):
        # Ratio-based comparison: the derivative magnitudes (1e-11 and
        # 1e-21 at these operating points) sit far below any sensible
        # absolute tolerance, so a plain approx() would be vacuous.
        from uavnet.experiments import fixed_grid_mm_laplace
        band = replace(band_mm, nakagami_m=3)
        dist = ServingDistanceDist(band.uav_density, H)
        eps = np.finfo(float).eps
        for gamma_db, q in ((-5.0, 0.5), (0.0, 0.25)):
            r = float(serving_ppf(dist, q))
            s = (db_to_linear(gamma_db) * band.nakagami_m
                 * r ** band.pathloss_exp / _coverage_scale(band, pattern64))
            d1 = laplace_mmwave_derivative(1, s, r, band, H, pattern64)
            d2 = laplace_mmwave_derivative(2, s, r, band, H, pattern64)
            h1 = s * eps ** (1 / 3)
            lm, _, lp = fixed_grid_mm_laplace([s - h1, s, s + h1], r, band,
                                              H, pattern64)
            fd1 = (lp - lm) / (2 * h1)
            assert abs(d1 / fd1 - 1.0) < 1e-4
            h2 = s * eps ** 0.25
            lm, l0, lp = fixed_grid_mm_laplace([s - h2, s, s + h2], r, band,
                                               H, pattern64)
            fd2 = (lp - 2 * l0 + lm) / h2 ** 2
            assert abs(d2 / fd2 - 1.0) < 1e-4


class TestCoverage:
    def test_lowfreq_limits(self, band_lf):
        assert coverage_lowfreq(1e-8, band_lf, H) == pytest.approx(1.0,
                                                                   abs=1e-3)
        assert coverage_lowfreq(1e8, band_lf, H) < 1e-6

    def test_lowfreq_monotone_in_threshold(self, band_lf):
        gammas = db_to_linear(np.arange(-10.0, 21.0, 3.0))
        values = [coverage_lowfreq(g, band_lf, H) for g in gammas]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_mmwave_limits_and_monotonicity(self, band_mm, pattern64):
        assert coverage_mmwave(1e-8, band_mm, H,
                               pattern64) == pytest.approx(1.0, abs=1e-3)
        gammas = db_to_linear(np.arange(-10.0, 21.0, 3.0))
        values = [coverage_mmwave(g, band_mm, H, pattern64) for g in gammas]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_rayleigh_reduction(self, band_mm, pattern64):
        band = replace(band_mm, nakagami_m=1)
        for gamma_db in (-10.0, -5.0, 0.0, 5.0, 10.0):
            gamma = db_to_linear(gamma_db)
            general = coverage_mmwave(gamma, band, H, pattern64)
            direct = coverage_mmwave_rayleigh(gamma, band, H, pattern64)
            assert abs(general - direct) < 1e-6

    def test_rayleigh_path_requires_shape_one(self, band_mm, pattern64):
        with pytest.raises(ValueError):
            coverage_mmwave_rayleigh(1.0, band_mm, H, pattern64)

    def test_total_is_convex_combination(self, band_lf, band_mm, pattern64):
        gamma = 1.0
        cov_lf = coverage_lowfreq(gamma, band_lf, H)
        cov_mm = coverage_mmwave(gamma, band_mm, H, pattern64)
        total_mm = coverage_total(gamma, band_lf, band_mm, 1.0, H,
                                  pattern64, assoc_mmwave=1.0)
        total_lf = coverage_total(gamma, band_lf, band_mm, 1.0, H,
                                  pattern64, assoc_mmwave=0.0)
        assert total_mm == pytest.approx(cov_mm, rel=1e-12)
        assert total_lf == pytest.approx(cov_lf, rel=1e-12)
        mixed = coverage_total(gamma, band_lf, band_mm, 1.0, H, pattern64,
                               assoc_mmwave=0.3)
        assert mixed == pytest.approx(0.7 * cov_lf + 0.3 * cov_mm,
                                      rel=1e-12)


class TestSpectralEfficiency:
    def test_lowfreq_decreases_with_noise(self, band_lf):
        spec = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10)
        noisy = [se_lowfreq(replace(band_lf, noise_power_w=p), H, spec)
                 for p in (1e-13, 1e-11, 1e-9, 1e-7)]
        assert all(v > 0 for v in noisy)
        assert all(b < a for a, b in zip(noisy, noisy[1:]))

    def test_mmwave_improves_with_antennas(self, band_mm):
        from uavnet.antenna import upa_from_count
        spec = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10)
        values = [se_mmwave(band_mm, H, upa_from_count(n), spec)
                  for n in (16, 64, 256)]
        assert all(v > 0 for v in values)
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestPerUserRate:
    def test_unloaded_mmwave_only(self, band_lf, band_mm, pattern64):
        # Huge bias forces everyone onto mmWave; a vanishing user density
        # leaves one user per cell, so the rate is bandwidth times SE.
        rate = per_user_rate(band_lf, band_mm, 1e12, 1e-15, H, pattern64,
                             se_lowfreq_value=0.5, se_mmwave_value=2.5)
        assert rate == pytest.approx(band_mm.bandwidth_hz * 2.5, rel=1e-6)

    def test_saturated_rate_halves_with_user_density(self, band_lf, band_mm,
                                                     pattern64):
        common = dict(band_lf=band_lf, band_mm=band_mm, bias=2.0, height=H,
                      pattern=pattern64, se_lowfreq_value=0.5,
                      se_mmwave_value=2.5)
        base = per_user_rate(user_density=0.05, **common)
        double = per_user_rate(user_density=0.10, **common)
        assert double == pytest.approx(base / 2.0, rel=1e-12)

    def test_saturated_rate_is_policy_blind(self, band_lf, band_mm,
                                            pattern64):
        # With every cell loaded far beyond one user the shared-bandwidth
        # model cancels the association split exactly; this is why the
        # density-ratio experiment runs at moderate user density.
        common = dict(band_lf=band_lf, band_mm=band_mm, user_density=0.05,
                      height=H, pattern=pattern64, se_lowfreq_value=0.5,
                      se_mmwave_value=2.5)
        assert per_user_rate(bias=1.0, **common) == pytest.approx(
            per_user_rate(bias=8.0, **common), rel=1e-12)

    def test_rejects_bad_user_density(self, band_lf, band_mm, pattern64):
        with pytest.raises(ValueError):
            per_user_rate(band_lf, band_mm, 1.0, 0.0, H, pattern64,
                          se_lowfreq_value=1.0, se_mmwave_value=1.0)


class TestLaplaceMonteCarlo:
    """Transforms against direct interference simulation (module-level
    smoke versions; the acceptance suite runs the full-size probes)."""

    def test_lowfreq_probe(self, params):
        from uavnet.simulator import empirical_laplace, region_radius
        band = params.band_lf
        dist = ServingDistanceDist(band.uav_density, H)
        r = float(serving_ppf(dist, 0.5))
        s = r ** band.pathloss_exp / (band.tx_power_w * band.pathloss_const)
        analytic = laplace_lowfreq(s, r, band)
        mc = empirical_laplace(s, band, r, H, region_radius(params), 30_000,
                               seed=5)
        assert analytic == pytest.approx(mc, rel=0.02)

    def test_mmwave_probe(self, params):
        from uavnet.simulator import empirical_laplace, region_radius
        band = params.band_mm
        dist = ServingDistanceDist(band.uav_density, H)
        r = 1.1 * H
        s = (band.nakagami_m * r ** band.pathloss_exp
             / (band.tx_power_w * params.pattern.gain_main
                * band.pathloss_const))
        analytic = laplace_mmwave(s, r, band, H, params.pattern)
        mc = empirical_laplace(s, band, r, H, region_radius(params), 20_000,
                               seed=6, pattern=params.pattern)
        assert analytic == pytest.approx(mc, rel=0.02)
