"""Per-band radio parameters and dB/linear conversion helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

C_LIGHT = 299_792_458.0  # m/s


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class BandConfig:
    """Radio parameters of one frequency band.

    The free-space path-loss constant is derived from the carrier frequency
    on access instead of being stored, so the two can never disagree.
    Small-scale fading is Nakagami with integer shape ``nakagami_m``;
    shape 1 is Rayleigh and is what the low-frequency band uses.

    Attributes:
        carrier_freq_hz: Carrier frequency in Hz.
        tx_power_w: UAV transmit power in watts.
        bandwidth_hz: Allocated bandwidth in Hz.
        noise_power_w: Receiver noise power in watts.
        pathloss_exp: Path-loss exponent (> 2 so interference converges).
        uav_density: UAV density in points per square meter.
        nakagami_m: Integer Nakagami fading shape (1 = Rayleigh).
    """

    carrier_freq_hz: float
    tx_power_w: float
    bandwidth_hz: float
    noise_power_w: float
    pathloss_exp: float
    uav_density: float
    nakagami_m: int = 1

    def __post_init__(self) -> None:
        for name in ("carrier_freq_hz", "tx_power_w", "bandwidth_hz",
                     "noise_power_w", "uav_density"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)
                    and value > 0):
                raise ValueError(f"{name} must be positive and finite")
        if not self.pathloss_exp > 2.0:
            raise ValueError("pathloss_exp must exceed 2 for a finite "
                             "interference field on the plane")
        if not (isinstance(self.nakagami_m, int) and self.nakagami_m >= 1):
            raise ValueError("nakagami_m must be an integer >= 1")

    @property
    def pathloss_const(self) -> float:
        """Inverse path loss at 1 m, (c / (4 pi f_c))^2."""
        return (C_LIGHT / (4.0 * math.pi * self.carrier_freq_hz)) ** 2

    def mean_rx_power(self, dist: float, gain: float = 1.0) -> float:
        """Average received power over fading at slant distance ``dist``."""
        return (self.tx_power_w * gain * self.pathloss_const
                * dist ** -self.pathloss_exp)
