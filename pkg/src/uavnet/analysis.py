"""Closed-form network metrics evaluated by adaptive quadrature.

Everything here analyses the typical ground user at the origin. Per band,
the chain is: serving-distance law -> conditional Laplace transform of the
aggregate interference -> coverage probability and spectral efficiency.
The two bands differ in fading (Rayleigh vs integer-shape Nakagami) and in
that mmWave interferers carry a random sectorized beamforming gain.

Conventions:
  * all SINR thresholds are linear here; dB conversion happens at the CLI,
  * all distances are slant distances, bounded below by the hover height,
  * interferer exclusion in a Laplace transform equals the serving
    distance within the same band; the bands do not interfere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import UpaPattern, main_lobe_prob
from .association import assoc_prob_mmwave
from .bands import BandConfig
from .geometry import ServingDistanceDist, serving_pdf
from .quadrature import (DEFAULT_SPEC, QuadratureSpec,
                         integrate_semi_infinite,
                         integrate_semi_infinite_multi)

_DAMP_CUTOFF = 1e-300


@dataclass
class MetricSet:
    """One bundle of network metrics, analytic or empirical.

    The coverage curve is stored as parallel arrays of dB thresholds and
    probabilities. ``extras`` carries run diagnostics (seeds, rejection
    counts, region radius and similar) that do not affect comparisons.
    """

    gamma_db: np.ndarray
    coverage: np.ndarray
    assoc_mmwave: float
    se_lowfreq: float
    se_mmwave: float
    se_total: float
    rate_per_user: float
    provenance: str
    extras: dict = field(default_factory=dict)


def log_moment_kernel(z, m: int):
    """Weight kernel turning E[log(1 + SINR)] into Laplace-transform form.

    For unit-mean gamma fading with integer shape m the kernel is
    (1 - (1 + z)^-m) / z, which tends to m as z -> 0. Evaluated through
    expm1/log1p so small and large z are both exact; for shape 2 this is
    algebraically (2 + z) / (1 + z)^2.
    """
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(arr < 0):
        raise ValueError("kernel argument must be non-negative")
    out = np.full_like(arr, float(m))
    live = arr > 0
    zv = arr[live]
    out[live] = -np.expm1(-m * np.log1p(zv)) / zv
    return float(out[0]) if np.ndim(z) == 0 else out


def _require_rayleigh(cfg: BandConfig) -> None:
    if cfg.nakagami_m != 1:
        raise ValueError("low-frequency formulas assume Rayleigh fading "
                         "(nakagami_m == 1)")


def _lowfreq_exponents(s_values: np.ndarray, r: float, cfg: BandConfig,
                       spec: QuadratureSpec) -> np.ndarray:
    """Exponents J(s | r) of the low-frequency transform for a batch of s.

    All transform arguments share one adaptively refined grid over the
    interferer domain [r, inf), which is much cheaper than one adaptive
    run per argument inside nested integrals.
    """
    s_values = np.asarray(s_values, dtype=float)
    pk = cfg.tx_power_w * cfg.pathloss_const
    alpha = cfg.pathloss_exp

    def integrand(z: np.ndarray) -> np.ndarray:
        w = np.outer(s_values * pk, z ** -alpha)
        return z[None, :] * w / (1.0 + w)

    tail = integrate_semi_infinite_multi(integrand, r, len(s_values), spec)
    return 2.0 * math.pi * cfg.uav_density * tail


def laplace_lowfreq(s: float, r: float, cfg: BandConfig,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Laplace transform of low-frequency interference at s, given the
    serving distance r (interferers live beyond r).

    Equals exp(-2 pi density * integral_r^inf z w / (1 + w) dz) with
    w = s P K z^-alpha, the standard Rayleigh-fading form.
    """
    if s < 0:
        raise ValueError("transform argument must be non-negative")
    _require_rayleigh(cfg)
    if s == 0.0:
        return 1.0
    return math.exp(-float(_lowfreq_exponents(np.array([s]), r, cfg,
                                              spec)[0]))


def _mm_scales(cfg: BandConfig, pattern: UpaPattern) -> tuple[float, float]:
    base = cfg.tx_power_w * cfg.pathloss_const / cfg.nakagami_m
    return base * pattern.gain_main, base * pattern.gain_side


def _mm_exponents(s_values: np.ndarray, r: float, cfg: BandConfig,
                  height: float, pattern: UpaPattern, spec: QuadratureSpec,
                  model: str) -> np.ndarray:
    """Exponents J(s | r) of the mmWave transform for a batch of s values,
    sharing one adaptive grid over the interferer domain."""
    s_values = np.asarray(s_values, dtype=float)
    c_main, c_side = _mm_scales(cfg, pattern)
    alpha = cfg.pathloss_exp
    m = cfg.nakagami_m

    def integrand(z: np.ndarray) -> np.ndarray:
        za = z ** -alpha
        p_main = main_lobe_prob(z, cfg.uav_density, height, pattern,
                                model=model)
        gap_main = -np.expm1(-m * np.log1p(np.outer(s_values * c_main, za)))
        gap_side = -np.expm1(-m * np.log1p(np.outer(s_values * c_side, za)))
        mix = p_main[None, :] * gap_main + (1.0 - p_main)[None, :] * gap_side
        return mix * z[None, :]

    tail = integrate_semi_infinite_multi(integrand, r, len(s_values), spec)
    return 2.0 * math.pi * cfg.uav_density * tail


def _mm_exponent(s: float, r: float, cfg: BandConfig, height: float,
                 pattern: UpaPattern, spec: QuadratureSpec,
                 model: str) -> float:
    """Exponent J(s | r) of the mmWave interference Laplace transform."""
    return float(_mm_exponents(np.array([s]), r, cfg, height, pattern,
                               spec, model)[0])


def _mm_exponent_derivs(s: float, r: float, cfg: BandConfig, height: float,
                        pattern: UpaPattern, spec: QuadratureSpec,
                        model: str, max_order: int) -> list[float]:
    """J(s | r) together with its s-derivatives up to ``max_order``.

    Differentiation under the integral sign gives, per gain level G with
    coefficient c = P G K z^-alpha / m,
    d^n/ds^n (1+sc)^-m = (-1)^n (m)_n c^n (1+sc)^(-m-n),
    with (m)_n the rising factorial. The integrands are evaluated with
    (s c)^n factored as a unit so every component of the shared vector
    quadrature is O(1); raw c^n would sit many orders of magnitude below
    the absolute tolerance and silence the refinement. All components
    share one adaptive grid over [r, inf).
    """
    c_main, c_side = _mm_scales(cfg, pattern)
    alpha = cfg.pathloss_exp
    m = cfg.nakagami_m

    def integrand(z: np.ndarray) -> np.ndarray:
        za = z ** -alpha
        p_main = main_lobe_prob(z, cfg.uav_density, height, pattern,
                                model=model)
        p_side = 1.0 - p_main
        x_main = s * c_main * za
        x_side = s * c_side * za
        rows = np.empty((1 + max_order, len(z)))
        rows[0] = (p_main * -np.expm1(-m * np.log1p(x_main))
                   + p_side * -np.expm1(-m * np.log1p(x_side))) * z
        pow_main = np.ones_like(z)
        pow_side = np.ones_like(z)
        for n in range(1, max_order + 1):
            pow_main = pow_main * x_main
            pow_side = pow_side * x_side
            rows[n] = (p_main * pow_main * (1.0 + x_main) ** (-m - n)
                       + p_side * pow_side * (1.0 + x_side) ** (-m - n)) * z
        return rows

    tails = integrate_semi_infinite_multi(integrand, r, 1 + max_order, spec)
    prefactor = 2.0 * math.pi * cfg.uav_density
    out = [prefactor * float(tails[0])]
    for n in range(1, max_order + 1):
        rising = math.prod(range(m, m + n))
        sign = -((-1.0) ** n)
        out.append(sign * prefactor * rising * float(tails[n]) / s ** n)
    return out


def laplace_mmwave(s: float, r: float, cfg: BandConfig, height: float,
                   pattern: UpaPattern, spec: QuadratureSpec = DEFAULT_SPEC,
                   model: str = "approx") -> float:
    """Laplace transform of mmWave interference at s given serving distance r.

    Interferer gains follow the two-point main/side-lobe distribution at
    each slant distance z (elevation model selectable), fading is
    Nakagami with the band's integer shape.
    """
    if s < 0:
        raise ValueError("transform argument must be non-negative")
    if s == 0.0:
        return 1.0
    return math.exp(-_mm_exponent(s, r, cfg, height, pattern, spec, model))


def _laplace_mmwave_derivs(max_order: int, s: float, r: float,
                           cfg: BandConfig, height: float,
                           pattern: UpaPattern, spec: QuadratureSpec,
                           model: str) -> list[float]:
    """All derivatives of the transform up to max_order at one (s, r).

    With L = exp(g), g = -J, the derivatives follow the product recurrence
    L^(n) = sum_k C(n-1, k) L^(k) g^(n-k), which is the complete Bell
    polynomial combination of the exponent derivatives.
    """
    if max_order == 0:
        return [math.exp(-_mm_exponent(s, r, cfg, height, pattern, spec,
                                       model))]
    exponent, *tail = _mm_exponent_derivs(s, r, cfg, height, pattern, spec,
                                          model, max_order)
    g = [0.0] + [-value for value in tail]
    derivs = [math.exp(-exponent)]
    for n in range(1, max_order + 1):
        derivs.append(sum(math.comb(n - 1, k) * derivs[k] * g[n - k]
                          for k in range(n)))
    return derivs


def laplace_mmwave_derivative(order: int, s: float, r: float,
                              cfg: BandConfig, height: float,
                              pattern: UpaPattern,
                              spec: QuadratureSpec = DEFAULT_SPEC,
                              model: str = "approx") -> float:
    """Order-i derivative of the mmWave Laplace transform in s.

    Needed up to order m - 1 by the Nakagami coverage expression, where
    E[I^i exp(-s I)] = (-1)^i L^(i)(s).
    """
    if not (0 <= order <= cfg.nakagami_m - 1):
        raise ValueError("order must lie in [0, nakagami_m - 1]")
    if s < 0:
        raise ValueError("transform argument must be non-negative")
    if order == 0:
        return laplace_mmwave(s, r, cfg, height, pattern, spec, model)
    return _laplace_mmwave_derivs(order, s, r, cfg, height, pattern, spec,
                                  model)[order]


def _serving_integral(dist: ServingDistanceDist, spec: QuadratureSpec,
                      fn) -> float:
    """Integral over the serving distance of fn(r) * pdf(r)."""

    def integrand(r: np.ndarray) -> np.ndarray:
        w = serving_pdf(dist, r)
        out = np.zeros_like(w)
        for i in np.nonzero(w > 0.0)[0]:
            out[i] = fn(float(r[i])) * w[i]
        return out

    return integrate_semi_infinite(integrand, dist.height, spec)


def coverage_lowfreq(gamma: float, cfg: BandConfig, height: float,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """P(low-frequency SINR > gamma) for the typical user, gamma linear."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    _require_rayleigh(cfg)
    dist = ServingDistanceDist(cfg.uav_density, height)
    pk = cfg.tx_power_w * cfg.pathloss_const
    lap_spec = spec.tighter()

    def survival(r: float) -> float:
        u = gamma * r ** cfg.pathloss_exp / pk
        damp = math.exp(-cfg.noise_power_w * u)
        if damp < _DAMP_CUTOFF:
            return 0.0
        return damp * laplace_lowfreq(u, r, cfg, lap_spec)

    return min(1.0, _serving_integral(dist, spec, survival))


def coverage_mmwave(gamma: float, cfg: BandConfig, height: float,
                    pattern: UpaPattern,
                    spec: QuadratureSpec = DEFAULT_SPEC,
                    model: str = "approx") -> float:
    """P(mmWave SINR > gamma) for the typical user, gamma linear.

    Nakagami fading of integer shape m makes the conditional survival a
    finite sum over fading orders; interference moments enter through the
    Laplace-transform derivatives up to order m - 1.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    m = cfg.nakagami_m
    dist = ServingDistanceDist(cfg.uav_density, height)
    pgk = cfg.tx_power_w * pattern.gain_main * cfg.pathloss_const
    noise = cfg.noise_power_w
    lap_spec = spec.tighter()

    def survival(r: float) -> float:
        u = gamma * m * r ** cfg.pathloss_exp / pgk
        damp = math.exp(-noise * u)
        if damp < _DAMP_CUTOFF:
            return 0.0
        derivs = _laplace_mmwave_derivs(m - 1, u, r, cfg, height, pattern,
                                        lap_spec, model)
        total = 0.0
        for k in range(m):
            inner = sum(math.comb(k, i) * noise ** (k - i)
                        * (-1.0) ** i * derivs[i]
                        for i in range(k + 1))
            total += u ** k / math.factorial(k) * inner
        return damp * total

    return min(1.0, _serving_integral(dist, spec, survival))


def coverage_mmwave_rayleigh(gamma: float, cfg: BandConfig, height: float,
                             pattern: UpaPattern,
                             spec: QuadratureSpec = DEFAULT_SPEC,
                             model: str = "approx") -> float:
    """Direct Rayleigh-form mmWave coverage, valid only for shape m = 1.

    Deliberately coded without the derivative machinery so it can serve
    as an independent check of the general-m path at m = 1.
    """
    if cfg.nakagami_m != 1:
        raise ValueError("direct Rayleigh form requires nakagami_m == 1")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    dist = ServingDistanceDist(cfg.uav_density, height)
    pgk = cfg.tx_power_w * pattern.gain_main * cfg.pathloss_const
    c_main = cfg.tx_power_w * pattern.gain_main * cfg.pathloss_const
    c_side = cfg.tx_power_w * pattern.gain_side * cfg.pathloss_const
    alpha = cfg.pathloss_exp
    lap_spec = spec.tighter()

    def survival(r: float) -> float:
        u = gamma * r ** alpha / pgk
        damp = math.exp(-cfg.noise_power_w * u)
        if damp < _DAMP_CUTOFF:
            return 0.0

        def integrand(z: np.ndarray) -> np.ndarray:
            za = z ** -alpha
            p_main = main_lobe_prob(z, cfg.uav_density, height, pattern,
                                    model=model)
            frac_main = u * c_main * za / (1.0 + u * c_main * za)
            frac_side = u * c_side * za / (1.0 + u * c_side * za)
            return (p_main * frac_main + (1.0 - p_main) * frac_side) * z

        exponent = (2.0 * math.pi * cfg.uav_density
                    * integrate_semi_infinite(integrand, r, lap_spec))
        return damp * math.exp(-exponent)

    return min(1.0, _serving_integral(dist, spec, survival))


def coverage_total(gamma: float, band_lf: BandConfig, band_mm: BandConfig,
                   bias: float, height: float, pattern: UpaPattern,
                   spec: QuadratureSpec = DEFAULT_SPEC,
                   model: str = "approx",
                   assoc_mmwave: float | None = None) -> float:
    """Association-weighted network coverage at a linear threshold.

    The weights are the analytic association probabilities under the given
    bias; pass ``assoc_mmwave`` to reuse a precomputed weight across a
    threshold grid.
    """
    if assoc_mmwave is None:
        assoc_mmwave = assoc_prob_mmwave(bias, band_lf, band_mm, height,
                                         pattern, spec)
    cov_lf = coverage_lowfreq(gamma, band_lf, height, spec)
    cov_mm = coverage_mmwave(gamma, band_mm, height, pattern, spec, model)
    return (1.0 - assoc_mmwave) * cov_lf + assoc_mmwave * cov_mm


def se_lowfreq(cfg: BandConfig, height: float,
               spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Unconditional low-frequency spectral efficiency, bits/s/Hz.

    E[log2(1 + SINR)] written as the integral of the SINR survival
    function over rate thresholds t, then over the serving distance.
    """
    _require_rayleigh(cfg)
    dist = ServingDistanceDist(cfg.uav_density, height)
    pk = cfg.tx_power_w * cfg.pathloss_const
    noise = cfg.noise_power_w
    alpha = cfg.pathloss_exp
    ln2 = math.log(2.0)
    inner_spec = spec.tighter()
    lap_spec = inner_spec.tighter()

    def per_distance(r: float) -> float:
        scale = r ** alpha / pk
        # Beyond this rate threshold the noise damping alone underflows
        # to zero, so the integrand is identically zero there.
        t_cap = math.log2(1.0 + 750.0 / (noise * scale))

        def t_integrand(t: np.ndarray) -> np.ndarray:
            out = np.zeros_like(t)
            live = np.nonzero(t < t_cap)[0]
            if len(live):
                v = np.expm1(t[live] * ln2) * scale
                damp = np.exp(-noise * v)
                exponents = _lowfreq_exponents(v, r, cfg, lap_spec)
                out[live] = damp * np.exp(-exponents)
            return out

        return integrate_semi_infinite(t_integrand, 0.0, inner_spec)

    return _serving_integral(dist, spec, per_distance)


def se_mmwave(cfg: BandConfig, height: float, pattern: UpaPattern,
              spec: QuadratureSpec = DEFAULT_SPEC,
              model: str = "approx") -> float:
    """Unconditional mmWave spectral efficiency, bits/s/Hz.

    Gamma fading is handled with the log-moment kernel: the expectation of
    ln(1 + SINR) becomes a kernel-weighted integral of the interference
    Laplace transform and the noise factor over an auxiliary variable.
    """
    m = cfg.nakagami_m
    dist = ServingDistanceDist(cfg.uav_density, height)
    pgk = cfg.tx_power_w * pattern.gain_main * cfg.pathloss_const
    noise = cfg.noise_power_w
    alpha = cfg.pathloss_exp
    ln2 = math.log(2.0)
    inner_spec = spec.tighter()
    lap_spec = inner_spec.tighter()

    def per_distance(r: float) -> float:
        ra = r ** alpha

        def z_integrand(z: np.ndarray) -> np.ndarray:
            kern = log_moment_kernel(z, m)
            v = m * z * ra / pgk
            damp = np.exp(-noise * v)
            out = np.zeros_like(z)
            live = np.nonzero(damp > _DAMP_CUTOFF)[0]
            if len(live):
                exponents = _mm_exponents(v[live], r, cfg, height, pattern,
                                          lap_spec, model)
                out[live] = kern[live] * damp[live] * np.exp(-exponents)
            return out

        return integrate_semi_infinite(z_integrand, 0.0, inner_spec)

    return _serving_integral(dist, spec, per_distance) / ln2


def per_user_rate(band_lf: BandConfig, band_mm: BandConfig, bias: float,
                  user_density: float, height: float, pattern: UpaPattern,
                  spec: QuadratureSpec = DEFAULT_SPEC,
                  model: str = "approx",
                  se_lowfreq_value: float | None = None,
                  se_mmwave_value: float | None = None) -> float:
    """Mean per-user downlink rate in bits/s under equal bandwidth sharing.

    A user lands on band t with the analytic association probability A_t
    and shares that band's bandwidth with the mean cell load
    max(1, user_density * A_t / uav_density_t). Spectral efficiencies can
    be passed in when already computed.
    """
    if not user_density > 0:
        raise ValueError("user_density must be positive")
    a_mm = assoc_prob_mmwave(bias, band_lf, band_mm, height, pattern, spec)
    a_lf = 1.0 - a_mm
    if se_lowfreq_value is None:
        se_lowfreq_value = se_lowfreq(band_lf, height, spec)
    if se_mmwave_value is None:
        se_mmwave_value = se_mmwave(band_mm, height, pattern, spec, model)
    load_mm = max(1.0, user_density * a_mm / band_mm.uav_density)
    load_lf = max(1.0, user_density * a_lf / band_lf.uav_density)
    return (a_mm * band_mm.bandwidth_hz / load_mm * se_mmwave_value
            + a_lf * band_lf.bandwidth_hz / load_lf * se_lowfreq_value)
