"""Ordering-free inference for locally dependent cross sections.

Tests and confidence sets for a mean (or for parameters defined by moment
restrictions) built from U-type statistics over randomly permuted
subsamples, with permutation critical values.  Also ships the random graph
and data generators, a restricted lambda-coefficient oracle and a Monte
Carlo harness used to study coverage.
"""

from .core import (
    CriticalValue,
    InferenceConfig,
    NotPositiveDefinite,
    Sample,
    SymmetricMatrix,
    default_block_size,
    invert_spd,
    normal_cdf,
    normal_quantile,
)
from .meantest import (
    ConfidenceFunctionCurve,
    MeanTestResult,
    bias_adjustment,
    confidence_function,
    confidence_set,
    mean_test,
    permutation_critical_value,
    s_statistic,
    sample_covariance,
    sample_mean,
    t_statistic,
    u_statistic,
)
from .momenttest import (
    MomentModel,
    ParamGridResult,
    confidence_function_theta,
    confidence_set_theta,
    critical_value_theta,
    linear_iv_model,
    mean_model,
    profiled_confidence_function,
    t_statistic_theta,
)
from .permute import Purpose, RngStream, draw_bundle, draw_prefix

__version__ = "0.1.0"

__all__ = [
    "ConfidenceFunctionCurve",
    "CriticalValue",
    "InferenceConfig",
    "MeanTestResult",
    "MomentModel",
    "NotPositiveDefinite",
    "ParamGridResult",
    "Purpose",
    "RngStream",
    "Sample",
    "SymmetricMatrix",
    "bias_adjustment",
    "confidence_function",
    "confidence_function_theta",
    "confidence_set",
    "confidence_set_theta",
    "critical_value_theta",
    "default_block_size",
    "draw_bundle",
    "draw_prefix",
    "invert_spd",
    "linear_iv_model",
    "mean_model",
    "mean_test",
    "normal_cdf",
    "normal_quantile",
    "permutation_critical_value",
    "profiled_confidence_function",
    "s_statistic",
    "sample_covariance",
    "sample_mean",
    "t_statistic",
    "t_statistic_theta",
    "u_statistic",
]
