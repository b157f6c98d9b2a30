import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from uavnet.association import LOWFREQ, MMWAVE
from uavnet.geometry import ServingDistanceDist, serving_cdf
from uavnet.simulator import (EmptyBandError, NetworkParams,
                              NetworkRealization, SimConfig,
                              SimulationError, drop_network,
                              far_field_moments, region_radius,
                              run_experiment, sample_nearest_slant,
                              sinr_at_typical, trial_rng)

H = 50.0


def _small_sim(**kw):
    defaults = dict(n_trials=400, policy="map", master_seed=5)
    defaults.update(kw)
    return SimConfig(**defaults)


class TestRegionRule:
    def test_radius_from_sparsest_band(self, params):
        radius = region_radius(params, 1e-9)
        lam = min(params.band_lf.uav_density, params.band_mm.uav_density)
        assert math.exp(-math.pi * lam * radius ** 2) == pytest.approx(
            1e-9, rel=1e-9)


class TestFarField:
    def test_moments_against_closed_forms(self, params):
        radius = region_radius(params)
        edge = math.hypot(radius, H)
        band = params.band_lf
        pk = band.tx_power_w * band.pathloss_const
        a = band.pathloss_exp
        mean_ref = (2 * math.pi * band.uav_density * pk
                    * edge ** (2 - a) / (a - 2))
        var_ref = (2 * math.pi * band.uav_density * pk ** 2 * 2.0
                   * edge ** (2 - 2 * a) / (2 * a - 2))
        ff = far_field_moments(band, H, radius)
        assert ff.mean == pytest.approx(mean_ref, rel=1e-8)
        assert ff.std == pytest.approx(math.sqrt(var_ref), rel=1e-8)

    def test_mmwave_far_field_is_side_lobe(self, params):
        # Main-lobe hits are extinct by the disk edge, so the out-of-window
        # gain statistics collapse to the side lobe.
        radius = region_radius(params)
        ff = far_field_moments(params.band_mm, H, radius,
                               pattern=params.pattern)
        band = params.band_mm
        pk = band.tx_power_w * band.pathloss_const * params.pattern.gain_side
        edge = math.hypot(radius, H)
        mean_ref = 2 * math.pi * band.uav_density * pk / edge
        assert ff.mean == pytest.approx(mean_ref, rel=1e-6)


class TestDropNetwork:
    def test_deterministic(self, params):
        radius = region_radius(params)
        a = drop_network(params, radius, (1, 7, 0))
        b = drop_network(params, radius, (1, 7, 0))
        assert np.array_equal(a.uavs_lf, b.uavs_lf)
        assert np.array_equal(a.uavs_mm, b.uavs_mm)
        assert np.array_equal(a.steer_targets, b.steer_targets)

    def test_counts_and_targets(self, params):
        radius = region_radius(params)
        real = drop_network(params, radius, (3, 0, 0))
        assert len(real.steer_targets) == len(real.uavs_mm)
        assert np.all(np.hypot(real.uavs_mm[:, 0],
                               real.uavs_mm[:, 1]) <= radius)

    def test_mean_count(self, params):
        radius = 2000.0
        counts = [len(drop_network(params, radius, (11, i, 0)).uavs_mm)
                  for i in range(100)]
        expected = params.band_mm.uav_density * math.pi * radius ** 2
        assert expected == pytest.approx(2e3 * math.pi, rel=1e-12)
        assert abs(np.mean(counts) - expected) < 3 * math.sqrt(
            expected / 100)

    def test_steer_distance_law(self, params):
        # The surrogate steering points reproduce the serving-distance
        # law of the beamforming band.
        radius = region_radius(params)
        slants = []
        for i in range(40):
            real = drop_network(params, radius, (23, i, 0))
            planar = np.hypot(*(real.steer_targets - real.uavs_mm).T)
            slants.append(np.sqrt(planar ** 2 + H ** 2))
        slants = np.concatenate(slants)
        law = ServingDistanceDist(params.band_mm.uav_density, H)
        ks = stats.kstest(slants, lambda x: serving_cdf(law, x))
        assert ks.statistic < 0.01

    def test_exact_user_mode(self, params):
        radius = 400.0
        real = drop_network(params, radius, (5, 0, 0), exact_user_ppp=True)
        surrogate = drop_network(params, radius, (5, 0, 0))
        assert len(real.steer_targets) == len(real.uavs_mm)
        assert not np.array_equal(real.steer_targets,
                                  surrogate.steer_targets)


class TestSinrAtTypical:
    def _one_uav_realization(self, xy):
        return NetworkRealization(
            uavs_lf=np.array([xy]), uavs_mm=np.array([xy]),
            steer_targets=np.array([[0.0, 0.0]]), trial_seed=(0,))

    def test_single_uav_closed_form(self, params):
        real = self._one_uav_realization([30.0, 40.0])
        rng = trial_rng(0, 0)
        expected_fading = trial_rng(0, 0).gamma(1, 1.0, 1)[0]
        sinr, r = sinr_at_typical(real, LOWFREQ, params, rng,
                                  far=None)
        assert r == pytest.approx(math.hypot(50.0, H))
        band = params.band_lf
        expected = (band.tx_power_w * band.pathloss_const * expected_fading
                    * r ** -band.pathloss_exp / band.noise_power_w)
        assert sinr == pytest.approx(expected, rel=1e-12)

    def test_mmwave_serving_gets_main_lobe(self, params):
        real = self._one_uav_realization([30.0, 40.0])
        rng = trial_rng(1, 0)
        m = params.band_mm.nakagami_m
        expected_fading = trial_rng(1, 0).gamma(m, 1.0 / m, 1)[0]
        sinr, r = sinr_at_typical(real, MMWAVE, params, rng, far=None)
        band = params.band_mm
        expected = (band.tx_power_w * params.pattern.gain_main
                    * band.pathloss_const * expected_fading
                    * r ** -band.pathloss_exp / band.noise_power_w)
        assert sinr == pytest.approx(expected, rel=1e-12)

    def test_interferer_reduces_sinr_for_fixed_draws(self, params):
        # Replay the generator draws by hand to verify the composition:
        # the same fading vector with the far interferer removed gives a
        # strictly larger SINR.
        real = NetworkRealization(
            uavs_lf=np.array([[30.0, 40.0], [200.0, 0.0]]),
            uavs_mm=np.array([[30.0, 40.0], [200.0, 0.0]]),
            steer_targets=np.array([[0.0, 0.0], [210.0, 0.0]]),
            trial_seed=(0,))
        rng = trial_rng(2, 0)
        sinr, r = sinr_at_typical(real, LOWFREQ, params, rng, far=None)
        fading = trial_rng(2, 0).gamma(1, 1.0, 2)
        band = params.band_lf
        d = np.array([math.hypot(50.0, H), math.hypot(200.0, H)])
        received = (band.tx_power_w * band.pathloss_const * fading
                    * d ** -band.pathloss_exp)
        expected = received[0] / (band.noise_power_w + received[1])
        assert sinr == pytest.approx(expected, rel=1e-12)
        alone = received[0] / band.noise_power_w
        assert sinr < alone

    def test_empty_band_raises(self, params):
        real = NetworkRealization(
            uavs_lf=np.empty((0, 2)), uavs_mm=np.array([[10.0, 0.0]]),
            steer_targets=np.array([[0.0, 0.0]]), trial_seed=(0,))
        with pytest.raises(EmptyBandError):
            sinr_at_typical(real, LOWFREQ, params, trial_rng(0, 0))

    def test_gain_modes_run(self, params):
        radius = region_radius(params)
        real = drop_network(params, radius, (9, 0, 0))
        for mode in ("geometric", "approximate"):
            sinr, _ = sinr_at_typical(real, MMWAVE, params,
                                      trial_rng(9, 1), gain_mode=mode)
            assert sinr > 0.0


class TestRunExperiment:
    def test_bitwise_deterministic(self, params):
        a = run_experiment(_small_sim(), params)
        b = run_experiment(_small_sim(), params)
        assert np.array_equal(a.coverage, b.coverage)
        assert a.se_lowfreq == b.se_lowfreq
        assert a.se_mmwave == b.se_mmwave
        assert a.assoc_mmwave == b.assoc_mmwave
        assert a.rate_per_user == b.rate_per_user

    def test_worker_count_does_not_change_results(self, params):
        seq = run_experiment(_small_sim(n_trials=600), params)
        par = run_experiment(_small_sim(n_trials=600, n_workers=2), params)
        assert np.array_equal(seq.coverage, par.coverage)
        assert seq.se_mmwave == par.se_mmwave
        assert seq.assoc_mmwave == par.assoc_mmwave

    def test_huge_bias_forces_mmwave(self, params):
        metrics = run_experiment(_small_sim(policy="fixed",
                                            fixed_bias=1e12), params)
        assert metrics.assoc_mmwave == 1.0

    def test_coverage_curve_monotone(self, params):
        metrics = run_experiment(_small_sim(), params)
        assert np.all(np.diff(metrics.coverage) <= 1e-12)
        assert np.all((metrics.coverage >= 0) & (metrics.coverage <= 1))

    def test_error_scales_with_trials(self, params):
        # Standard error of the coverage estimate should shrink roughly
        # like 1/sqrt(n) across an ensemble of independent seeds.
        cov_small, cov_big = [], []
        for seed in range(40):
            cov_small.append(run_experiment(
                _small_sim(n_trials=200, master_seed=100 + seed),
                params).coverage[10])
            cov_big.append(run_experiment(
                _small_sim(n_trials=800, master_seed=500 + seed),
                params).coverage[10])
        ratio = np.std(cov_small) / np.std(cov_big)
        assert 1.4 < ratio < 2.9

    def test_impossible_density_raises(self, params):
        sparse = NetworkParams(
            band_lf=replace(params.band_lf, uav_density=1e-12),
            band_mm=params.band_mm, height=H, pattern=params.pattern,
            user_density=params.user_density)
        sim = _small_sim(n_trials=2, radius_override=10.0)
        with pytest.raises(SimulationError):
            run_experiment(sim, sparse)

    def test_serving_distance_law_from_drops(self, params):
        n = 100_000
        radius = region_radius(params)
        rng = trial_rng(77, 3)
        slants = sample_nearest_slant(params.band_mm.uav_density, H,
                                      radius, rng, n)
        law = ServingDistanceDist(params.band_mm.uav_density, H)
        ks = stats.kstest(slants, lambda x: serving_cdf(law, x))
        assert ks.statistic < 0.01


class TestSimConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SimConfig(n_trials=0)
        with pytest.raises(ValueError):
            SimConfig(gain_mode="psychic")
        with pytest.raises(ValueError):
            SimConfig(policy="fixed")
        with pytest.raises(ValueError):
            SimConfig(void_prob=2.0)
        with pytest.raises(ValueError):
            SimConfig(n_workers=0)
