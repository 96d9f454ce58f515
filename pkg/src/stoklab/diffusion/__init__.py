"""Generators, boundary-value and Fokker-Planck solvers, exit-time Monte Carlo, closed forms."""

from .bvp import BvpProblem, GridFunction, laplace_bvp, required_grid_size, solve_exit_bvp, solve_sequence
from .closed_forms import CATALOG, adaptive_simpson, closed_form
from .density import DensityGrid, evolve_density
from .montecarlo import (
    BallExitResult,
    ExitStatistics,
    arcsine_cdf,
    arcsine_occupation,
    ehrenfest_limit_moments,
    exit_bias_allowance,
    mc_ball_exit,
    mc_exit_statistics,
)
from .operators import apply_adjoint, apply_generator

__all__ = [
    "BvpProblem", "GridFunction", "laplace_bvp", "required_grid_size", "solve_exit_bvp", "solve_sequence",
    "CATALOG", "adaptive_simpson", "closed_form", "DensityGrid", "evolve_density", "BallExitResult",
    "ExitStatistics", "arcsine_cdf", "arcsine_occupation", "ehrenfest_limit_moments", "exit_bias_allowance",
    "mc_ball_exit", "mc_exit_statistics", "apply_adjoint", "apply_generator",
]
