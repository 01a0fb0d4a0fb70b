"""Conditionally Gaussian nonlinear filtering toolkit.

Observation-driven matrix Riccati filters, grid solvers for the
unnormalized density equation (direct and exponentially transformed),
a weighted-particle oracle, and a divergence-form stochastic heat
testbed, wired to a config-driven experiment runner.

The sequential kernels run on a compiled extension when it is built and
fall back to pure NumPy otherwise; set KALZAK_BACKEND=pure or
KALZAK_BACKEND=compiled to force one.
"""

__version__ = "0.1.0"

from . import _backends
from .errors import (AcceptanceFailure, ConfigError, FilterDivergenceError,
                     MassError, NumericError)
from .models import (ModelSpec, ModelValidationError, classic_scalar,
                     constant, derived_at, fields_along, random_bounded,
                     scalar_correlated, silent_observation)
from .paths import (PathBundle, coarsen_increments, coarsen_path,
                    exponential_martingale, simulate_paths)
from .riccati import (FilterRun, QuadraticForm, eval_Q, q_sde_residual,
                      run_filter)
from .grids import DensityGrid, box_halfwidth, init_density, make_axis
from .zakai import (SolverOptions, ZakaiRun, cfl_suggest, energy_diagnostic,
                    reconstruct, run_reduced, run_zakai)
from .particles import ParticleRun, compare_filters, particle_filter
from .testbed import (GeneralCoefficients, apriori_ratio, heat_coefficients,
                      noisy_heat_coefficients, product_rule_residual,
                      run_general, weak_residual)

__all__ = [
    "__version__",
    "AcceptanceFailure", "ConfigError", "FilterDivergenceError",
    "MassError", "NumericError", "ModelValidationError",
    "ModelSpec", "classic_scalar", "constant", "derived_at", "fields_along",
    "random_bounded", "scalar_correlated", "silent_observation",
    "PathBundle", "coarsen_increments", "coarsen_path",
    "exponential_martingale", "simulate_paths",
    "FilterRun", "QuadraticForm", "eval_Q", "q_sde_residual", "run_filter",
    "DensityGrid", "box_halfwidth", "init_density", "make_axis",
    "SolverOptions", "ZakaiRun", "cfl_suggest", "energy_diagnostic",
    "reconstruct", "run_reduced", "run_zakai",
    "ParticleRun", "compare_filters", "particle_filter",
    "GeneralCoefficients", "apriori_ratio", "heat_coefficients",
    "noisy_heat_coefficients", "product_rule_residual", "run_general",
    "weak_residual",
    "_backends",
]
