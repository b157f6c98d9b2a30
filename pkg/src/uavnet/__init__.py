"""Multi-band UAV downlink network evaluator.

Closed-form coverage, spectral-efficiency and association analysis for a
two-band (low-frequency plus beamforming mmWave) aerial network, paired
with a reproducible Monte Carlo simulator that cross-validates every
analytical result. Includes an adaptive cell-range-expansion association
policy whose bias is a sigmoid of the bands' spectral-efficiency ratio.
"""

from .analysis import (MetricSet, coverage_lowfreq, coverage_mmwave,
                       coverage_mmwave_rayleigh, coverage_total,
                       laplace_lowfreq, laplace_mmwave,
                       laplace_mmwave_derivative, log_moment_kernel,
                       per_user_rate, se_lowfreq, se_mmwave)
from .antenna import (InterfererGainDist, UpaPattern, geometric_gain,
                      interferer_gain_dist, main_lobe_prob, p_elevation,
                      upa_from_count)
from .association import (LOWFREQ, MMWAVE, AssociationOutcome, CrePolicy,
                          assoc_prob_mmwave, associate, bias_factor,
                          mean_power_ratio, se_ratio)
from .bands import BandConfig, db_to_linear, dbm_to_watts, linear_to_db
from .config import ConfigError, ExperimentConfig, load_config
from .geometry import (Ppp2D, ServingDistanceDist, mean_inverse_pathloss,
                       sample_ppp, sample_serving_distance, serving_cdf,
                       serving_pdf, serving_ppf, serving_survival)
from .quadrature import (DEFAULT_SPEC, QuadratureError, QuadratureSpec,
                         integrate, integrate_semi_infinite)
from .simulator import (EmptyBandError, FarField, NetworkParams,
                        NetworkRealization, SimConfig, SimulationError,
                        TrialResult, drop_network, empirical_laplace,
                        far_field_moments, region_radius, run_experiment,
                        sinr_at_typical, trial_rng)

__version__ = "0.1.0"
