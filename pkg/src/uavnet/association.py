"""Cell-range-expansion association policy and association probabilities.

Users pick between the low-frequency and mmWave band by comparing biased
average received powers: associate with mmWave when
bias * S_mm >= S_lf, where S_t is the fading-averaged received power from
the nearest UAV of band t (beamformed, so the mmWave side carries the
main-lobe gain). The bias is a sigmoid of the spectral-efficiency ratio of
the two bands, scaled by a standardization constant that equalises the
mean received powers, so it is a pure function of network statistics.
The conventional max-average-received-power (MAP) policy is the special
case bias = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .antenna import UpaPattern
from .bands import BandConfig
from .geometry import (ServingDistanceDist, mean_inverse_pathloss,
                       serving_pdf, serving_survival)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite

LOWFREQ = "lf"
MMWAVE = "mm"


@dataclass(frozen=True)
class AssociationOutcome:
    band: str
    serving_distance: float


def bias_factor(max_bias: float, growth_rate: float, standardization: float,
                se_ratio: float) -> float:
    """Adaptive association bias.

    bias = standardization * max_bias
           / (1 + (max_bias - 1) * exp(growth_rate * (1 - se_ratio)))

    Strictly increasing in the SE ratio, equal to the standardization at
    ratio 1 and saturating at standardization * max_bias.
    """
    if not max_bias > 1.0:
        raise ValueError("max_bias must exceed 1")
    if not growth_rate > 0.0:
        raise ValueError("growth_rate must be positive")
    if not standardization > 0.0:
        raise ValueError("standardization must be positive")
    if not se_ratio >= 0.0:
        raise ValueError("se_ratio must be non-negative")
    x = growth_rate * (1.0 - se_ratio)
    if x > 0.0:
        # exp(x) can overflow; the algebraically identical form below stays
        # finite and underflows gracefully to zero.
        return standardization * max_bias * math.exp(-x) / (
            math.exp(-x) + (max_bias - 1.0))
    return standardization * max_bias / (1.0 + (max_bias - 1.0) * math.exp(x))


@dataclass(frozen=True)
class CrePolicy:
    """Bias policy parameters together with the resulting bias value."""

    max_bias: float
    growth_rate: float
    standardization: float
    se_ratio: float
    bias: float

    def __post_init__(self) -> None:
        expected = bias_factor(self.max_bias, self.growth_rate,
                               self.standardization, self.se_ratio)
        if not math.isclose(self.bias, expected, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("bias inconsistent with policy parameters")

    @classmethod
    def from_stats(cls, max_bias: float, growth_rate: float,
                   standardization: float, se_ratio: float) -> "CrePolicy":
        return cls(max_bias=max_bias, growth_rate=growth_rate,
                   standardization=standardization, se_ratio=se_ratio,
                   bias=bias_factor(max_bias, growth_rate, standardization,
                                    se_ratio))


def mean_power_ratio(band_lf: BandConfig, band_mm: BandConfig, height: float,
                     pattern: UpaPattern,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Standardization constant: mean received power ratio lf / mmWave.

    Uses the expectation of the inverse path loss over each band's own
    serving-distance law; the mmWave side includes the main-lobe gain.
    """
    e_lf = mean_inverse_pathloss(
        ServingDistanceDist(band_lf.uav_density, height),
        band_lf.pathloss_exp, spec)
    e_mm = mean_inverse_pathloss(
        ServingDistanceDist(band_mm.uav_density, height),
        band_mm.pathloss_exp, spec)
    num = band_lf.tx_power_w * band_lf.pathloss_const * e_lf
    den = (band_mm.tx_power_w * pattern.gain_main
           * band_mm.pathloss_const * e_mm)
    return num / den


def se_ratio(se_mmwave: float, se_lowfreq: float) -> float:
    """Ratio of the two bands' unconditional spectral efficiencies."""
    if not se_lowfreq > 0.0:
        raise ValueError("low-frequency spectral efficiency must be positive")
    if not se_mmwave >= 0.0:
        raise ValueError("mmWave spectral efficiency must be non-negative")
    return se_mmwave / se_lowfreq


def associate(dist_lf: float, dist_mm: float, bias: float,
              band_lf: BandConfig, band_mm: BandConfig,
              pattern: UpaPattern) -> AssociationOutcome:
    """Biased average-received-power association decision.

    Ties go to the mmWave band (a measure-zero event, fixed for
    determinism). MAP is ``bias = 1``.
    """
    s_lf = band_lf.mean_rx_power(dist_lf)
    s_mm = band_mm.mean_rx_power(dist_mm, gain=pattern.gain_main)
    if bias * s_mm >= s_lf:
        return AssociationOutcome(band=MMWAVE, serving_distance=dist_mm)
    return AssociationOutcome(band=LOWFREQ, serving_distance=dist_lf)


def assoc_prob_mmwave(bias: float, band_lf: BandConfig, band_mm: BandConfig,
                      height: float, pattern: UpaPattern,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Probability that a typical user associates with the mmWave band.

    Integrates, over the mmWave serving distance r, the probability that
    the nearest low-frequency UAV is farther than the biased-power
    break-even distance eta^(1/a_lf) * r^(a_mm/a_lf) with
    eta = P_lf K_lf / (bias P_mm G_main K_mm).
    """
    if not bias > 0.0:
        raise ValueError("bias must be positive")
    dist_mm = ServingDistanceDist(band_mm.uav_density, height)
    dist_lf = ServingDistanceDist(band_lf.uav_density, height)
    eta = (band_lf.tx_power_w * band_lf.pathloss_const
           / (bias * band_mm.tx_power_w * pattern.gain_main
              * band_mm.pathloss_const))
    scale = eta ** (1.0 / band_lf.pathloss_exp)
    expo = band_mm.pathloss_exp / band_lf.pathloss_exp

    def integrand(r: np.ndarray) -> np.ndarray:
        w = serving_pdf(dist_mm, r)
        out = np.zeros_like(w)
        live = w > 0.0
        if np.any(live):
            threshold = np.maximum(height, scale * r[live] ** expo)
            out[live] = serving_survival(dist_lf, threshold) * w[live]
        return out

    a_mm = integrate_semi_infinite(integrand, height, spec)
    return min(max(a_mm, 0.0), 1.0)
