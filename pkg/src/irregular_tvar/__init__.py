"""Estimation and simulation for time-varying AR(1) processes with one-sided innovations."""

from .distributions import InnovationDist, gamma, parse_dist, power_uniform, weibull
from .errors import ConfigError, LPError, TvarError
from .estimator import estimate_curve, fit_local, optimal_bandwidth, regularized_baseline, truncation_level
from .lp_core import LinearProgram, LpStatus, solve_lp
from .prediction import predict_next
from .process import CoefficientFunction, Path, parse_coefficient, regression_transform, simulate_path

__version__ = "0.1.0"

__all__ = [
    "CoefficientFunction",
    "ConfigError",
    "InnovationDist",
    "LPError",
    "LinearProgram",
    "LpStatus",
    "Path",
    "TvarError",
    "estimate_curve",
    "fit_local",
    "gamma",
    "optimal_bandwidth",
    "parse_coefficient",
    "parse_dist",
    "power_uniform",
    "predict_next",
    "regression_transform",
    "regularized_baseline",
    "simulate_path",
    "truncation_level",
    "weibull",
]
