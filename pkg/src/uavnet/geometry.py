"""Poisson networks on a disk and the nearest-UAV distance law.

UAVs hover at a common height above a ground plane; distances are slant
(3D) distances from a ground user to a UAV, so every distance is at least
the hover height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite

# exp(-x) underflows to zero well before x = 745; beyond that the density
# is identically zero in double precision and the formulas are skipped to
# avoid overflow in the intermediate squares.
_EXP_CUTOFF = 745.0


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    return arr, np.ndim(x) == 0


@dataclass(frozen=True)
class Ppp2D:
    """Homogeneous planar Poisson process on a disk around the origin.

    Attributes:
        density: Intensity in points per square meter.
        region_radius: Disk radius in meters.
        seed: Default seed used when no random generator is supplied.
    """

    density: float
    region_radius: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.density) and self.density > 0):
            raise ValueError("density must be positive and finite")
        if not (math.isfinite(self.region_radius) and self.region_radius > 0):
            raise ValueError("region_radius must be positive and finite")

    @property
    def mean_count(self) -> float:
        return self.density * math.pi * self.region_radius ** 2


def sample_ppp(proc: Ppp2D, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw one realisation of the process.

    Returns an (n, 2) array of planar coordinates. The point count is
    Poisson with the process mean and points are uniform on the disk.
    The same generator state (or the process seed) reproduces the exact
    same array.
    """
    if rng is None:
        rng = np.random.default_rng(proc.seed)
    n = rng.poisson(proc.mean_count)
    radii = proc.region_radius * np.sqrt(rng.random(n))
    angles = 2.0 * math.pi * rng.random(n)
    return np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))


@dataclass(frozen=True)
class ServingDistanceDist:
    """Distribution of the slant distance to the nearest UAV of one band.

    For a planar Poisson field of intensity ``density`` at height
    ``height``, the nearest-UAV slant distance R has
    pdf(r) = 2 pi density r exp(-pi density (r^2 - h^2)) on r >= h.
    """

    density: float
    height: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.density) and self.density > 0):
            raise ValueError("density must be positive and finite")
        if not (math.isfinite(self.height) and self.height > 0):
            raise ValueError("height must be positive and finite")

    @property
    def _support_max(self) -> float:
        # Radius beyond which the pdf underflows to exactly zero.
        return math.sqrt(self.height ** 2
                         + _EXP_CUTOFF / (math.pi * self.density))


def serving_pdf(dist: ServingDistanceDist, r) -> np.ndarray | float:
    """Density of the nearest-UAV slant distance; zero below the height."""
    arr, scalar = _as_array(r)
    out = np.zeros_like(arr)
    lam, h = dist.density, dist.height
    live = (arr >= h) & (arr <= dist._support_max)
    rv = arr[live]
    out[live] = (2.0 * math.pi * lam * rv
                 * np.exp(-math.pi * lam * (rv * rv - h * h)))
    return float(out[0]) if scalar else out


def serving_cdf(dist: ServingDistanceDist, r) -> np.ndarray | float:
    """P(R <= r); zero below the height, tends to one."""
    arr, scalar = _as_array(r)
    out = np.zeros_like(arr)
    lam, h = dist.density, dist.height
    out[arr >= dist._support_max] = 1.0
    live = (arr >= h) & (arr < dist._support_max)
    rv = arr[live]
    out[live] = -np.expm1(-math.pi * lam * (rv * rv - h * h))
    return float(out[0]) if scalar else out


def serving_survival(dist: ServingDistanceDist, r) -> np.ndarray | float:
    """P(R > r); one below the height."""
    arr, scalar = _as_array(r)
    out = np.ones_like(arr)
    lam, h = dist.density, dist.height
    out[arr >= dist._support_max] = 0.0
    live = (arr >= h) & (arr < dist._support_max)
    rv = arr[live]
    out[live] = np.exp(-math.pi * lam * (rv * rv - h * h))
    return float(out[0]) if scalar else out


def serving_ppf(dist: ServingDistanceDist, q) -> np.ndarray | float:
    """Quantile function (inverse CDF) of the serving distance."""
    arr, scalar = _as_array(q)
    if np.any((arr < 0) | (arr >= 1)):
        raise ValueError("quantile must lie in [0, 1)")
    lam, h = dist.density, dist.height
    out = np.sqrt(h * h - np.log1p(-arr) / (math.pi * lam))
    return float(out[0]) if scalar else out


def sample_serving_distance(dist: ServingDistanceDist,
                            rng: np.random.Generator,
                            size: int | None = None) -> np.ndarray | float:
    """Inverse-CDF sampler for the serving distance law."""
    u = rng.random(size)
    r = np.sqrt(dist.height ** 2
                - np.log1p(-u) / (math.pi * dist.density))
    return r


def mean_inverse_pathloss(dist: ServingDistanceDist, alpha: float,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """E[R^-alpha] for the serving distance R, by quadrature.

    The integrand is supported on [height, inf) and bounded by
    height^-alpha, so the expectation is always finite.
    """
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError("alpha must be finite and non-negative")
    h = dist.height

    # Integrate (r/h)^-alpha so the integrand is O(1) whatever the
    # absolute distance scale; rescale afterwards.
    def integrand(r: np.ndarray) -> np.ndarray:
        w = serving_pdf(dist, r)
        out = np.zeros_like(w)
        live = w > 0.0
        out[live] = (r[live] / h) ** -alpha * w[live]
        return out

    return h ** -alpha * integrate_semi_infinite(integrand, h, spec)
