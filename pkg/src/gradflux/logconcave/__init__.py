"""Quadrature oracles for log-concave densities in dimension at most three."""

from .curvature import (
    KERNEL_RTOL,
    QuadraticForm,
    check_lemma_app_main,
    check_quantitative_logconcavity,
    d_curvature,
    gamma_eta,
    hess_inverse_form,
    inverse_forms,
    one_point_convexity,
    symmetric_gap,
)
from .density1d import (
    CheckReport,
    DensityGrid1D,
    DensityStats,
    check_prop21,
    check_second_derivative_tail,
    check_var_via_logconcavity,
    density_stats,
    prekopa_leindler_check,
)
from .densitynd import (
    LogConcaveDensityND,
    expectation,
    marginal_density,
    slice_expectation,
    slice_integral,
)
from .io import GridDensity, load_density, save_density, tabulate

__all__ = [
    "CheckReport",
    "DensityGrid1D",
    "DensityStats",
    "GridDensity",
    "KERNEL_RTOL",
    "LogConcaveDensityND",
    "QuadraticForm",
    "check_lemma_app_main",
    "check_prop21",
    "check_quantitative_logconcavity",
    "check_second_derivative_tail",
    "check_var_via_logconcavity",
    "d_curvature",
    "density_stats",
    "expectation",
    "gamma_eta",
    "hess_inverse_form",
    "inverse_forms",
    "load_density",
    "marginal_density",
    "one_point_convexity",
    "prekopa_leindler_check",
    "save_density",
    "slice_expectation",
    "slice_integral",
    "symmetric_gap",
    "tabulate",
]
