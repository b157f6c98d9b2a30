import pytest

from uavnet import BandConfig, NetworkParams, dbm_to_watts, upa_from_count

HEIGHT = 50.0


@pytest.fixture(scope="session")
def band_lf():
    return BandConfig(carrier_freq_hz=2e9, tx_power_w=dbm_to_watts(30.0),
                      bandwidth_hz=20e6, noise_power_w=dbm_to_watts(-91.0),
                      pathloss_exp=2.5, uav_density=10e-6, nakagami_m=1)


@pytest.fixture(scope="session")
def band_mm():
    return BandConfig(carrier_freq_hz=60e9, tx_power_w=dbm_to_watts(40.0),
                      bandwidth_hz=600e6, noise_power_w=dbm_to_watts(-76.0),
                      pathloss_exp=3.0, uav_density=500e-6, nakagami_m=2)


@pytest.fixture(scope="session")
def pattern64():
    return upa_from_count(64)


@pytest.fixture(scope="session")
def params(band_lf, band_mm, pattern64):
    return NetworkParams(band_lf=band_lf, band_mm=band_mm, height=HEIGHT,
                         pattern=pattern64, user_density=5e4 * 1e-6)
