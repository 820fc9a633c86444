"""Conductances, energy programs and tail-exponent bounds."""

from .bounds import (
    CorollaryBound,
    SimplexBound,
    SimplexBoundProblem,
    TailCurve,
    corollary_quadratic_bound,
    d_eta_t,
    direct_energy_infimum,
    dstar_exponent,
    dstar_value,
    gap_potential,
    simplex_energy_bound,
    tail_bound,
    tau,
)
from .conductance import (
    WeightedGraph,
    dirichlet_energy,
    effective_conductance,
    hessian_weighted_conductance,
)
from .gaussian import (
    gaussian_covariance,
    gaussian_gradient_variance,
    gaussian_mean,
    gaussian_variance,
)
from .simplex import (
    PolynomialObjective,
    ScaledPotentialObjective,
    SimplexSolution,
    project_simplex,
    solve_multiplier,
    solve_pgd,
)
