"""L0 adaptive ridge: iteratively reweighted ridge regression for L0-penalized selection."""

__version__ = "0.1.0"

from .core import (ARConfig, ARResult, InvalidInputError, NumericalError, effective_penalty,
                   extract_support, run_ar, update_weights, update_weights_stable)
from .glm import GlmDataset, fit_ml, nr_ar, regularization_path
from .linreg import Dataset, ar_linear, estimate_sigma2, standardize, weighted_ridge_solve
from .ortho import ScalarDynamics, fixed_points, threshold_select
from .segmentation import ar_segment, dp_exact_segment, seg_ridge_solve
from .selection import Criterion, all_subset_select, stepwise_select
from .simulation import ScenarioSpec, evaluate, run_scenario

__all__ = [
    "ARConfig", "ARResult", "InvalidInputError", "NumericalError", "effective_penalty",
    "extract_support", "run_ar", "update_weights", "update_weights_stable",
    "GlmDataset", "fit_ml", "nr_ar", "regularization_path",
    "Dataset", "ar_linear", "estimate_sigma2", "standardize", "weighted_ridge_solve",
    "ScalarDynamics", "fixed_points", "threshold_select",
    "ar_segment", "dp_exact_segment", "seg_ridge_solve",
    "Criterion", "all_subset_select", "stepwise_select",
    "ScenarioSpec", "evaluate", "run_scenario",
]
