"""Distribution steering for scalar discrete-time ensembles via power moments."""

from .distributions import (
    Atomic,
    Cauchy,
    Gaussian,
    GeneralizedLogisticI,
    GridDensity,
    Laplace,
    Mixture,
    ScalarDistribution,
    Uniform,
    from_config,
    moments_by_quadrature,
)
from .gain_optimizer import GainResult, feasible_floor, optimize_gain
from .kl_realization import (
    RealizationProblem,
    RealizedDensity,
    atomic_from_singular,
    choose_prior,
    dual_objective,
    realize,
    realize_moments,
)
from .moment_core import (
    ORDER_CAP,
    TAU_PSD,
    MomentVector,
    extended_schedule,
    hankel,
    is_pd,
    is_psd,
    min_eig,
    scaled_hankel,
    smooth_trajectory,
    truncate,
)
from .moment_dynamics import (
    DynamicsSpec,
    StepMoments,
    control_cost,
    full_input_moments,
    propagate,
    solve_control_moments,
    step_moments,
)
from .steering_engine import (
    EnsembleState,
    SteeringPlan,
    SteeringProblem,
    StepPlan,
    default_fit_range,
    empirical_moments,
    fit_polynomial,
    plan,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "Atomic", "Cauchy", "Gaussian", "GeneralizedLogisticI", "GridDensity",
    "Laplace", "Mixture", "ScalarDistribution", "Uniform", "from_config",
    "moments_by_quadrature",
    "GainResult", "feasible_floor", "optimize_gain",
    "RealizationProblem", "RealizedDensity", "atomic_from_singular",
    "choose_prior", "dual_objective", "realize", "realize_moments",
    "ORDER_CAP", "TAU_PSD", "MomentVector", "extended_schedule", "hankel",
    "is_pd", "is_psd", "min_eig", "scaled_hankel", "smooth_trajectory",
    "truncate",
    "DynamicsSpec", "StepMoments", "control_cost", "full_input_moments",
    "propagate", "solve_control_moments", "step_moments",
    "EnsembleState", "SteeringPlan", "SteeringProblem", "StepPlan",
    "default_fit_range", "empirical_moments", "fit_polynomial", "plan",
    "simulate",
]
