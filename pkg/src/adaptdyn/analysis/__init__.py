"""Evaluation metrics, prediction-error curves, and error-propagation bounds."""

from .bounds import (
    BoundCheckReport,
    ConvergenceParams,
    LipschitzEstimate,
    continuous_bound,
    discrete_bound,
    empirical_bound_check,
    eps_f,
    estimate_lipschitz,
    gamma_N,
    uub_radius,
)
from .curves import ErrorCurve, error_curve, read_curve_csv, write_curve_csv
from .metrics import first_reach, quat_angle_error, rmse, success_rate

__all__ = [
    "BoundCheckReport",
    "ConvergenceParams",
    "ErrorCurve",
    "LipschitzEstimate",
    "continuous_bound",
    "discrete_bound",
    "empirical_bound_check",
    "eps_f",
    "error_curve",
    "estimate_lipschitz",
    "first_reach",
    "gamma_N",
    "quat_angle_error",
    "read_curve_csv",
    "rmse",
    "success_rate",
    "uub_radius",
    "write_curve_csv",
]
