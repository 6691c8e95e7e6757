"""Simulation and verification of density-dependent jump processes near a saddle."""

from .errors import *  # noqa: F401,F403
from .flow import (CanonicalFrame, Crossing, StableAsymptotics, UnstableAsymptotics, flow,
                   flow_jacobian, saddle_frame, stable_asymptotics, stable_point,
                   unstable_asymptotics, unstable_crossing)
from .fluct import FluctuationReport, LimitLaw, limit_law_cdf, sigma_infinity, simulate_gamma
from .models import (DiffusionModel, DriftSpec, JumpModel, build_competition, build_linear_toy,
                     build_model, build_ok_corral, diffusion_of, drift_of)
from .montecarlo import (EnsembleJob, FunctionalSpec, SampleSet, empirical_cdf, ks_distance,
                         mix64, run_ensemble, run_multi)
from .sim import (PathFunctional, StopRule, Trajectory, flow_deviation, hitting_time_theta,
                  min_distance, rescaled_Z, simulate_diffusion, simulate_jump, survivors,
                  terminal_profile_error)

__version__ = "0.1.0"
