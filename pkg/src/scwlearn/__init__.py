"""Soft confidence-weighted online learning and first/second-order baselines."""

from .core import (ConfigError, CovarianceMode, DegenerateInputError, DomainError,
                   Example, GaussianState, HyperParams, InputError, LearnerKind,
                   NumericError, SCWError, StepOutcome, UpdateCoefficients, predict)
from .learners import (MarginStats, OnlineLearner, apply_second_order_update,
                       arow_coefficients, cw_coefficients, margin_stats, pa_coefficient,
                       scw1_coefficients, scw2_coefficients)
from .numeric import (Tolerance, cov_downdate, inv_norm_cdf, norm_cdf,
                      oracle_minimize_scw, quad_form)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CovarianceMode", "DegenerateInputError", "DomainError", "Example",
    "GaussianState", "HyperParams", "InputError", "LearnerKind", "NumericError",
    "SCWError", "StepOutcome", "UpdateCoefficients", "predict",
    "MarginStats", "OnlineLearner", "apply_second_order_update", "arow_coefficients",
    "cw_coefficients", "margin_stats", "pa_coefficient", "scw1_coefficients",
    "scw2_coefficients",
    "Tolerance", "cov_downdate", "inv_norm_cdf", "norm_cdf", "oracle_minimize_scw",
    "quad_form",
]
