"""Score-based deterministic particle solver for the homogeneous Landau equation.

Particles evolve under the pairwise collision drift built from the Landau
kernel and a score function (gradient-log-density) that is either learned
online by implicit score matching, given in closed form, or reconstructed by
the mollified-entropy (blob) quadrature.  The density along each trajectory
is recovered exactly through a log-determinant evolution equation.
"""

__version__ = "0.1.0"

from .backend import BACKEND, available_backends
from .config import ExperimentConfig, load_config, load_preset, save_config
from .density import DensityTracker
from .diagnostics import (
    KdeConfig,
    MeshSpec,
    convergence_stats,
    entropy_quadrature,
    kde_at_points,
    kde_on_mesh,
    relative_fisher,
    relative_l2_error,
)
from .kernels import IdentityKernel, KernelParams, LandauKernel
from .optim import Adam, Adamax, make_optimizer
from .particles import (
    ParticleEnsemble,
    compute_drift,
    entropy_decay_estimate,
    euler_step,
    midpoint_step,
    moments,
)
from .providers import AnalyticScore, BlobScore, LearnedScore, LinearScore
from .runner import (
    RunResult,
    kde_error_against_oracle,
    run_experiment,
    run_particle_count_sweep,
    run_timestep_sweep,
    run_timing_study,
)
from .score import MlpArchitecture, ScoreModel, initial_fit_loss, ism_loss
from .solutions import (
    BiMaxwellian2d,
    Bkw2d,
    Bkw3d,
    Maxwellian,
    Rosenbluth3d,
    SamplerConfig,
    draw_samples,
    make_initial_law,
    make_rng,
)
from .training import train_initial, train_step_ism

__all__ = [
    "BACKEND",
    "available_backends",
    "ExperimentConfig",
    "load_config",
    "load_preset",
    "save_config",
    "DensityTracker",
    "KdeConfig",
    "MeshSpec",
    "convergence_stats",
    "entropy_quadrature",
    "kde_at_points",
    "kde_on_mesh",
    "relative_fisher",
    "relative_l2_error",
    "IdentityKernel",
    "KernelParams",
    "LandauKernel",
    "Adam",
    "Adamax",
    "make_optimizer",
    "ParticleEnsemble",
    "compute_drift",
    "entropy_decay_estimate",
    "euler_step",
    "midpoint_step",
    "moments",
    "AnalyticScore",
    "BlobScore",
    "LearnedScore",
    "LinearScore",
    "RunResult",
    "kde_error_against_oracle",
    "run_experiment",
    "run_particle_count_sweep",
    "run_timestep_sweep",
    "run_timing_study",
    "MlpArchitecture",
    "ScoreModel",
    "initial_fit_loss",
    "ism_loss",
    "BiMaxwellian2d",
    "Bkw2d",
    "Bkw3d",
    "Maxwellian",
    "Rosenbluth3d",
    "SamplerConfig",
    "draw_samples",
    "make_initial_law",
    "make_rng",
    "train_initial",
    "train_step_ism",
    "__version__",
]
