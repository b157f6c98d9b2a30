"""Experiment configuration: YAML schema, defaults and validation.

The file format is a key tree; units at this boundary are the engineering
ones (GHz, dBm, MHz, UAVs per km2) and are converted to SI linear units
exactly once when the typed objects are built. Unknown keys anywhere in
the tree are rejected with the full key path, as are out-of-range values.

The built-in defaults reproduce the evaluation profile used by the three
bundled experiments: 2 / 60 GHz carriers, 30 / 40 dBm transmit power,
20 / 600 MHz bandwidth, -91 / -76 dBm noise, path-loss exponents
2.5 / 3.0, 10 / 500 UAVs per km2, 50 m hover height, 64 antennas and bias
parameters (5, 5). The rate-vs-density sweep carries its own, much lower,
user density: with the shared-bandwidth load model a fully saturated
network yields a per-user rate that is independent of the association
split (the loads cancel algebraically), so the sweep is run in the
partially loaded regime where the policy comparison is informative.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .antenna import ELEVATION_MODELS, UpaPattern, upa_from_count
from .bands import BandConfig, dbm_to_watts
from .quadrature import QuadratureSpec
from .simulator import GAIN_MODES, NetworkParams, SimConfig


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "bands": {
        "lf": {
            "carrier_freq_ghz": 2.0,
            "tx_power_dbm": 30.0,
            "bandwidth_mhz": 20.0,
            "noise_dbm": -91.0,
            "pathloss_exp": 2.5,
            "density_per_km2": 10.0,
            "nakagami_m": 1,
        },
        "mm": {
            "carrier_freq_ghz": 60.0,
            "tx_power_dbm": 40.0,
            "bandwidth_mhz": 600.0,
            "noise_dbm": -76.0,
            "pathloss_exp": 3.0,
            "density_per_km2": 500.0,
            "nakagami_m": 2,
        },
    },
    "geometry": {
        "height_m": 50.0,
        "user_density_per_km2": 5.0e4,
    },
    "antenna": {
        "n_elements": 64,
        "elevation_model": "approx",
    },
    "bias": {
        "max_bias": 5.0,
        "growth_rate": 5.0,
    },
    "sinr_grid_db": {
        "start": -10.0,
        "stop": 20.0,
        "step": 1.0,
    },
    "sweep": {
        "density_ratios": [5.0, 10.0, 25.0, 50.0, 100.0],
        "antenna_counts": [16, 64, 256],
        "rate_user_density_per_km2": 50.0,
    },
    "simulation": {
        "n_trials": 10_000,
        "master_seed": 1,
        "gain_mode": "geometric",
        "policy": "cre",
        "fixed_bias": None,
        "far_field": True,
        "exact_user_ppp": False,
        "void_probability": 1.0e-9,
        "radius_override_m": None,
        "workers": 1,
    },
    "quadrature": {
        "rel_tol": 1.0e-8,
        "abs_tol": 1.0e-12,
        "max_subdivisions": 200,
    },
    "output": {
        "path": None,
    },
}


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _want_number(value, path: str, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        _fail(path, "must be finite")
    if positive and not value > 0:
        _fail(path, "must be positive")
    if nonneg and value < 0:
        _fail(path, "must be non-negative")
    return value


def _want_int(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}")
    return value


def _want_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected true/false, got {value!r}")
    return value


def _want_choice(value, path: str, choices) -> str:
    if value not in choices:
        _fail(path, f"expected one of {sorted(choices)}, got {value!r}")
    return value


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in base:
            _fail(here, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                _fail(here, "expected a mapping")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def _band_from_tree(tree: dict, path: str) -> BandConfig:
    try:
        return BandConfig(
            carrier_freq_hz=_want_number(tree["carrier_freq_ghz"],
                                         f"{path}.carrier_freq_ghz",
                                         positive=True) * 1e9,
            tx_power_w=dbm_to_watts(_want_number(tree["tx_power_dbm"],
                                                 f"{path}.tx_power_dbm")),
            bandwidth_hz=_want_number(tree["bandwidth_mhz"],
                                      f"{path}.bandwidth_mhz",
                                      positive=True) * 1e6,
            noise_power_w=dbm_to_watts(_want_number(tree["noise_dbm"],
                                                    f"{path}.noise_dbm")),
            pathloss_exp=_want_number(tree["pathloss_exp"],
                                      f"{path}.pathloss_exp", positive=True),
            uav_density=_want_number(tree["density_per_km2"],
                                     f"{path}.density_per_km2",
                                     positive=True) * 1e-6,
            nakagami_m=_want_int(tree["nakagami_m"],
                                 f"{path}.nakagami_m", minimum=1),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, unit-converted experiment description."""

    params: NetworkParams
    sim: SimConfig
    gamma_grid_db: np.ndarray
    density_ratios: tuple
    antenna_counts: tuple
    rate_user_density: float
    quad: QuadratureSpec
    elevation_model: str
    out_path: str | None
    raw: dict

    def with_pattern(self, pattern: UpaPattern) -> "ExperimentConfig":
        params = NetworkParams(
            band_lf=self.params.band_lf, band_mm=self.params.band_mm,
            height=self.params.height, pattern=pattern,
            user_density=self.params.user_density)
        return ExperimentConfig(
            params=params, sim=self.sim, gamma_grid_db=self.gamma_grid_db,
            density_ratios=self.density_ratios,
            antenna_counts=self.antenna_counts,
            rate_user_density=self.rate_user_density, quad=self.quad,
            elevation_model=self.elevation_model, out_path=self.out_path,
            raw=self.raw)


def build_config(tree: dict) -> ExperimentConfig:
    """Validate a merged key tree and construct the typed configuration."""
    band_lf = _band_from_tree(tree["bands"]["lf"], "bands.lf")
    band_mm = _band_from_tree(tree["bands"]["mm"], "bands.mm")

    geo = tree["geometry"]
    height = _want_number(geo["height_m"], "geometry.height_m",
                          positive=True)
    user_density = _want_number(geo["user_density_per_km2"],
                                "geometry.user_density_per_km2",
                                positive=True) * 1e-6

    ant = tree["antenna"]
    n_elements = _want_int(ant["n_elements"], "antenna.n_elements",
                           minimum=4)
    try:
        pattern = upa_from_count(n_elements)
    except ValueError as exc:
        raise ConfigError(f"antenna.n_elements: {exc}") from exc
    elevation_model = _want_choice(ant["elevation_model"],
                                   "antenna.elevation_model",
                                   ELEVATION_MODELS)

    bias = tree["bias"]
    max_bias = _want_number(bias["max_bias"], "bias.max_bias", positive=True)
    if max_bias <= 1.0:
        _fail("bias.max_bias", "must exceed 1")
    growth = _want_number(bias["growth_rate"], "bias.growth_rate",
                          positive=True)

    grid = tree["sinr_grid_db"]
    start = _want_number(grid["start"], "sinr_grid_db.start")
    stop = _want_number(grid["stop"], "sinr_grid_db.stop")
    step = _want_number(grid["step"], "sinr_grid_db.step", positive=True)
    if stop < start:
        _fail("sinr_grid_db.stop", "must be >= start")
    gamma_grid = np.arange(start, stop + step * 1e-9, step)

    sweep = tree["sweep"]
    ratios = sweep["density_ratios"]
    if not (isinstance(ratios, list) and ratios):
        _fail("sweep.density_ratios", "expected a non-empty list")
    ratios = tuple(_want_number(x, "sweep.density_ratios", positive=True)
                   for x in ratios)
    counts = sweep["antenna_counts"]
    if not (isinstance(counts, list) and counts):
        _fail("sweep.antenna_counts", "expected a non-empty list")
    counts = tuple(_want_int(x, "sweep.antenna_counts", minimum=4)
                   for x in counts)
    rate_density = _want_number(sweep["rate_user_density_per_km2"],
                                "sweep.rate_user_density_per_km2",
                                positive=True) * 1e-6

    quad_tree = tree["quadrature"]
    try:
        quad = QuadratureSpec(
            rel_tol=_want_number(quad_tree["rel_tol"], "quadrature.rel_tol",
                                 positive=True),
            abs_tol=_want_number(quad_tree["abs_tol"], "quadrature.abs_tol",
                                 positive=True),
            max_subdivisions=_want_int(quad_tree["max_subdivisions"],
                                       "quadrature.max_subdivisions",
                                       minimum=1))
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from exc

    simt = tree["simulation"]
    fixed_bias = simt["fixed_bias"]
    if fixed_bias is not None:
        fixed_bias = _want_number(fixed_bias, "simulation.fixed_bias",
                                  positive=True)
    radius_override = simt["radius_override_m"]
    if radius_override is not None:
        radius_override = _want_number(radius_override,
                                       "simulation.radius_override_m",
                                       positive=True)
    void = _want_number(simt["void_probability"],
                        "simulation.void_probability", positive=True)
    if not void < 1:
        _fail("simulation.void_probability", "must be < 1")
    policy = _want_choice(simt["policy"], "simulation.policy",
                          ("cre", "map", "fixed"))
    if policy == "fixed" and fixed_bias is None:
        _fail("simulation.fixed_bias", "required when policy is 'fixed'")
    try:
        sim = SimConfig(
            n_trials=_want_int(simt["n_trials"], "simulation.n_trials",
                               minimum=1),
            gain_mode=_want_choice(simt["gain_mode"],
                                   "simulation.gain_mode", GAIN_MODES),
            policy=policy,
            fixed_bias=fixed_bias,
            max_bias=max_bias,
            bias_growth=growth,
            master_seed=_want_int(simt["master_seed"],
                                  "simulation.master_seed", minimum=0),
            void_prob=void,
            radius_override=radius_override,
            far_field=_want_bool(simt["far_field"], "simulation.far_field"),
            exact_user_ppp=_want_bool(simt["exact_user_ppp"],
                                      "simulation.exact_user_ppp"),
            n_workers=_want_int(simt["workers"], "simulation.workers",
                                minimum=1),
            elevation_model=elevation_model,
            gamma_grid_db=gamma_grid,
            quad=quad,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"simulation: {exc}") from exc

    out_path = tree["output"]["path"]
    if out_path is not None and not isinstance(out_path, str):
        _fail("output.path", "expected a string path")

    params = NetworkParams(band_lf=band_lf, band_mm=band_mm, height=height,
                           pattern=pattern, user_density=user_density)
    return ExperimentConfig(
        params=params, sim=sim, gamma_grid_db=gamma_grid,
        density_ratios=ratios, antenna_counts=counts,
        rate_user_density=rate_density, quad=quad,
        elevation_model=elevation_model, out_path=out_path, raw=tree)


def load_config(path: str | None = None,
                overrides: dict | None = None) -> ExperimentConfig:
    """Load defaults, merge an optional YAML file, then CLI overrides."""
    tree = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a mapping")
        tree = _merge(tree, loaded)
    if overrides:
        tree = _merge(tree, overrides)
    return build_config(tree)
