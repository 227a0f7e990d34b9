"""Simulation-based minimum sample size for clinical prediction models."""

from .baselines import EpvInput, epv_sample_size
from .data import Dataset
from .datagen import GeneratorSpec, TunedGenerator, generate, tune_intercept, tune_scale
from .metrics import MetricSpec, auc, brier, calibration_slope, mape, r_squared, register_metric
from .models import FittedModel, ModelStrategy, fit_linear, fit_logistic, get_strategy, predict, register_strategy
from .search import SampleSizeResult, SolverConfig, check_reachability, solve_sample_size
from .simulate import PerformanceSummary, empirical_quantile, quantile_se, run_at_n
from .surrogate import CurveObservation, find_crossing, fit_power_law, gp_fit, gp_predict

__version__ = "0.1.0"

__all__ = [
    "CurveObservation", "Dataset", "EpvInput", "FittedModel", "GeneratorSpec", "MetricSpec",
    "ModelStrategy", "PerformanceSummary", "SampleSizeResult", "SolverConfig", "TunedGenerator",
    "auc", "brier", "calibration_slope", "check_reachability", "empirical_quantile",
    "epv_sample_size", "find_crossing", "fit_linear", "fit_logistic", "fit_power_law", "generate",
    "get_strategy", "gp_fit", "gp_predict", "mape", "predict", "quantile_se", "r_squared",
    "register_metric", "register_strategy", "run_at_n", "solve_sample_size", "tune_intercept",
    "tune_scale",
]
