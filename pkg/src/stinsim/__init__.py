"""stinsim: rate-splitting precoder design for satellite-terrestrial networks.

A LEO satellite (1-layer rate splitting: one common plus Ks private streams)
and a terrestrial BS (Kt unicast streams) are designed separately, coupled
only through scalar reports, via a two-stage generalized power iteration on
ergodic spectral-efficiency lower bounds.  Includes channel synthesis, MMSE
CSIT, SLNR/ZF baselines, and a reproducible Monte-Carlo harness.
"""

from .baselines import slnr_max, zf_local, zf_single_cell
from .channel import (ChannelRealization, CovarianceSet, CsitEstimate,
                      draw_channels, mmse_estimate, sample_from_covariance,
                      spatial_covariances, upa_response)
from .decouple import (MECHANISMS, ReportValues, compute_reports,
                       gamma_common_tu, gamma_private_su, gamma_private_tu,
                       instantaneous_reports, rate_common_su, zero_reports)
from .gpi import (GpiSettings, GpiTrace, assemble_bs_matrices,
                  assemble_sat_matrices, kkt_residual, lse_soft_min, mrt_init,
                  mu_schedule, run_bs_stage, run_sat_stage, run_stin_gpi,
                  softmin_weights)
from .harness import (AXES, METHODS, SweepSpec, TrialResult, run_trial, sweep,
                      trial_seed_key, write_outputs)
from .rates import (QuadraticFormSet, RateReport, StackedPrecoders,
                    build_quadratic_forms, lower_bound_rates, stack,
                    true_instantaneous_rates, unstack)
from .scenario import (ConfigError, LinkBudget, SystemConfig, UserPlacement,
                       link_budget, load_config, parse_config_text,
                       place_users)

__version__ = "0.1.0"
