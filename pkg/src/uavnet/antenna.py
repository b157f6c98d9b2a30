"""Sectorized planar-array gain model and interferer gain statistics.

A square uniform planar array is abstracted to a rectangular main lobe:
full gain inside an azimuth-by-elevation window centred on the steering
direction, side-lobe gain outside. For an interfering UAV that steers at
its own user, the chance that a bystander falls inside the main lobe
factorises into an azimuth term (uniform angles) and an elevation term
that depends on the bystander's slant distance.

Three elevation models are provided:
  * ``approx``  - closed-form product of the beamwidth and the local slope
                  of the distance law (the default used by the analysis),
  * ``exact``   - the CDF of the serving-distance law differenced over the
                  beam's elevation window (no small-beam approximation),
  * ``uniform`` - elevation angle uniform over [0, pi/2), a common
                  simplified baseline.

The ``approx`` form tracks ``exact`` to a few percent out to roughly 1.4x
the hover height and then decays too fast; both are exposed so the gap can
be measured instead of assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ServingDistanceDist, serving_cdf

ELEVATION_MODELS = ("approx", "exact", "uniform")

_EXP_CUTOFF = 745.0


@dataclass(frozen=True)
class UpaPattern:
    """Sectorized gain description of a square uniform planar array."""

    n_antennas: int
    bw_azimuth: float
    bw_elevation: float
    gain_main: float
    gain_side: float

    def __post_init__(self) -> None:
        if not (0 < self.bw_azimuth < 2 * math.pi
                and 0 < self.bw_elevation < math.pi):
            raise ValueError("beamwidths out of range")
        if not (self.gain_main > 0 and self.gain_side > 0):
            raise ValueError("gains must be positive")


def upa_from_count(n: int) -> UpaPattern:
    """Build the sectorized pattern of a square array with ``n`` elements.

    Half-power beamwidths are sqrt(3/n) in both planes, the main-lobe gain
    equals the element count and the side-lobe gain follows from energy
    conservation over the sphere.
    """
    if not isinstance(n, (int, np.integer)) or n < 4:
        raise ValueError("antenna count must be an integer >= 4")
    root = math.isqrt(int(n))
    if root * root != n:
        raise ValueError("antenna count must be a perfect square")
    bw = math.sqrt(3.0 / n)
    sqrt_n = math.sqrt(n)
    k = math.sqrt(3.0) / (2.0 * math.pi)
    s = math.sin(math.sqrt(3.0) / (2.0 * sqrt_n))
    gain_side = (sqrt_n - k * n * s) / (sqrt_n - k * s)
    return UpaPattern(n_antennas=int(n), bw_azimuth=bw, bw_elevation=bw,
                      gain_main=float(n), gain_side=gain_side)


@dataclass(frozen=True)
class InterfererGainDist:
    """Two-point gain distribution of an interfering beamforming UAV."""

    p_main: float
    p_side: float
    gain_main: float
    gain_side: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_main <= 1.0 and 0.0 <= self.p_side <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(self.p_main + self.p_side - 1.0) > 1e-12:
            raise ValueError("p_main + p_side must equal 1")

    def mean_gain(self) -> float:
        return self.p_main * self.gain_main + self.p_side * self.gain_side


def _check_distance(d: np.ndarray, height: float) -> None:
    if np.any(d < height):
        raise ValueError("slant distance below the hover height")


def _elev_approx(d: np.ndarray, density: float, height: float,
                 bw_elevation: float) -> np.ndarray:
    out = np.zeros_like(d)
    h = height
    dmax = math.sqrt(h * h + _EXP_CUTOFF / (math.pi * density))
    live = (d > h) & (d <= dmax)
    dv = d[live]
    out[live] = (2.0 * math.pi * density * bw_elevation
                 * np.exp(-math.pi * density * (dv * dv - h * h))
                 * dv * dv * np.sqrt(dv * dv - h * h) / h)
    return np.clip(out, 0.0, 1.0)


def _elev_exact(d: np.ndarray, density: float, height: float,
                bw_elevation: float) -> np.ndarray:
    dist = ServingDistanceDist(density=density, height=height)
    phi0 = np.arccos(np.clip(height / d, -1.0, 1.0))
    lo = np.maximum(phi0 - bw_elevation / 2.0, 0.0)
    hi = phi0 + bw_elevation / 2.0
    r_lo = height / np.cos(lo)
    upper = np.where(hi < math.pi / 2.0,
                     serving_cdf(dist, height / np.cos(np.minimum(hi, math.pi / 2 - 1e-12))),
                     1.0)
    return np.clip(upper - serving_cdf(dist, r_lo), 0.0, 1.0)


def p_elevation(d, density: float, height: float, pattern: UpaPattern,
                model: str = "approx") -> np.ndarray | float:
    """Probability that a bystander at slant distance ``d`` lies inside the
    elevation window of a beam steered at the interferer's own user.

    Args:
        d: Slant distance(s), >= height.
        density: UAV density of the beamforming band, per square meter.
        height: Hover height in meters.
        pattern: Array pattern providing the elevation beamwidth.
        model: One of ``approx``, ``exact``, ``uniform``.
    """
    arr = np.atleast_1d(np.asarray(d, dtype=float))
    _check_distance(arr, height)
    if model == "approx":
        out = _elev_approx(arr, density, height, pattern.bw_elevation)
    elif model == "exact":
        out = _elev_exact(arr, density, height, pattern.bw_elevation)
    elif model == "uniform":
        out = np.full_like(arr, min(pattern.bw_elevation / (math.pi / 2.0), 1.0))
    else:
        raise ValueError(f"unknown elevation model {model!r}")
    return float(out[0]) if np.ndim(d) == 0 else out


def main_lobe_prob(d, density: float, height: float, pattern: UpaPattern,
                   model: str = "approx") -> np.ndarray | float:
    """Main-lobe hit probability: azimuth term times elevation term."""
    p_theta = pattern.bw_azimuth / (2.0 * math.pi)
    p_phi = p_elevation(d, density, height, pattern, model=model)
    return np.clip(p_theta * p_phi, 0.0, 1.0)


def interferer_gain_dist(d: float, density: float, height: float,
                         pattern: UpaPattern,
                         model: str = "approx") -> InterfererGainDist:
    """Two-point gain distribution of one interferer at slant distance d."""
    p_main = float(main_lobe_prob(d, density, height, pattern, model=model))
    return InterfererGainDist(p_main=p_main, p_side=1.0 - p_main,
                              gain_main=pattern.gain_main,
                              gain_side=pattern.gain_side)


def geometric_gain(uav_pos, steer_target, probe, pattern: UpaPattern):
    """Gain of beamforming UAV(s) toward a probe point on the ground.

    Args:
        uav_pos: (..., 3) UAV positions, third component the hover height.
        steer_target: (..., 2) ground point each UAV steers its beam at.
        probe: (2,) ground point whose received gain is evaluated.
        pattern: Sectorized array pattern.

    Returns:
        Main-lobe gain where the probe falls inside both the azimuth and
        elevation windows of the steered beam, side-lobe gain elsewhere.
        Elevation is measured from straight down. A probe directly under a
        UAV has no defined azimuth and counts as inside the azimuth window.
    """
    pos = np.atleast_2d(np.asarray(uav_pos, dtype=float))
    tgt = np.atleast_2d(np.asarray(steer_target, dtype=float))
    probe = np.asarray(probe, dtype=float)
    height = pos[:, 2]

    to_tgt = tgt - pos[:, :2]
    to_prb = probe[None, :] - pos[:, :2]
    rho_tgt = np.hypot(to_tgt[:, 0], to_tgt[:, 1])
    rho_prb = np.hypot(to_prb[:, 0], to_prb[:, 1])

    el_tgt = np.arctan2(rho_tgt, height)
    el_prb = np.arctan2(rho_prb, height)
    az_tgt = np.arctan2(to_tgt[:, 1], to_tgt[:, 0])
    az_prb = np.arctan2(to_prb[:, 1], to_prb[:, 0])

    daz = np.abs((az_prb - az_tgt + math.pi) % (2.0 * math.pi) - math.pi)
    in_az = (daz <= pattern.bw_azimuth / 2.0) | (rho_prb == 0.0)
    in_el = np.abs(el_prb - el_tgt) <= pattern.bw_elevation / 2.0

    gains = np.where(in_az & in_el, pattern.gain_main, pattern.gain_side)
    if np.ndim(uav_pos) == 1:
        return float(gains[0])
    return gains
