"""Stochastic optimization with multiple objectives via constrained primal-dual SGD."""

from .baselines import burn_in_pgd, scalarize
from .core import (ConfigurationError, ConvergenceError, DomainError, GeneratorError,
                   InfeasibleError, OracleError, RunTrace, SmooError, SolverConfig,
                   VacuousGuaranteeError, derive_step_size, mu_bound, union_confidence)
from .harness import ExperimentConfig, ExperimentReport, fit_rate, run_experiment
from .oracle import (ProblemSpec, StochasticOracle, make_known_optimum_quadratic,
                     make_np_classification, make_np_from_data, make_portfolio,
                     make_stochastic_lp)
from .pd_solver import configure, estimate_dual_caps, primal_dual_step, solve, solve_exact
from .projection import (HalfspaceBallProjector, project_ball, project_box,
                         project_halfspaces, project_simplex)

__version__ = "0.1.0"

__all__ = [
    "burn_in_pgd",
    "scalarize",
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "GeneratorError",
    "InfeasibleError",
    "OracleError",
    "RunTrace",
    "SmooError",
    "SolverConfig",
    "VacuousGuaranteeError",
    "derive_step_size",
    "mu_bound",
    "union_confidence",
    "ExperimentConfig",
    "ExperimentReport",
    "fit_rate",
    "run_experiment",
    "ProblemSpec",
    "StochasticOracle",
    "make_known_optimum_quadratic",
    "make_np_classification",
    "make_np_from_data",
    "make_portfolio",
    "make_stochastic_lp",
    "configure",
    "estimate_dual_caps",
    "primal_dual_step",
    "solve",
    "solve_exact",
    "HalfspaceBallProjector",
    "project_ball",
    "project_box",
    "project_halfspaces",
    "project_simplex",
]
