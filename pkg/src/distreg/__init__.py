"""Nonparametric distributional regression in Wasserstein geometry.

Estimate conditional distributions by locally weighted empirical measures,
evaluate the estimation error exactly against known laws, and reproduce the
convergence behaviour predicted by closed-form risk bounds.
"""

from .bounds import (
    BoundReport,
    ClassParams,
    RateInfo,
    effective_sample_size,
    kernel_bound,
    knn_bound,
    minimax_rate,
    pointwise_risk_bound,
)
from .functionals import (
    FunctionalSpec,
    conditional_functional,
    covariance_functional,
    evaluate_functional,
    pwm,
    quantile_functional,
    regularized_incomplete_beta,
    tail_expectation,
)
from .measures import (
    AnalyticDistribution1D,
    DiscreteDistribution,
    cdf_eval,
    dirac,
    dispersion,
    gaussian_law,
    make_discrete,
    moment,
    quantile_eval,
    uniform_law,
)
from .ot import (
    ConvergenceError,
    SlicedConfig,
    SlicedEstimate,
    TransportPlan,
    max_sliced_wp,
    sliced_wp,
    w1_cdf,
    w1_vs_analytic,
    wp_bruteforce,
    wp_exact,
    wp_quantile,
)
from .regressor import Dataset, FittedRegressor, fit, predict_distribution, predict_mean
from .synth import PRESETS, certify_class, make_preset
from .weights import (
    KernelScheme,
    KnnScheme,
    WeightVector,
    kernel_weights,
    knn_weights,
    stone_diagnostics,
)

__all__ = [
    "AnalyticDistribution1D",
    "BoundReport",
    "ClassParams",
    "ConvergenceError",
    "Dataset",
    "DiscreteDistribution",
    "FittedRegressor",
    "FunctionalSpec",
    "KernelScheme",
    "KnnScheme",
    "PRESETS",
    "RateInfo",
    "SlicedConfig",
    "SlicedEstimate",
    "TransportPlan",
    "WeightVector",
    "cdf_eval",
    "certify_class",
    "conditional_functional",
    "covariance_functional",
    "dirac",
    "dispersion",
    "effective_sample_size",
    "evaluate_functional",
    "fit",
    "gaussian_law",
    "kernel_bound",
    "kernel_weights",
    "knn_bound",
    "knn_weights",
    "make_discrete",
    "make_preset",
    "max_sliced_wp",
    "minimax_rate",
    "moment",
    "pointwise_risk_bound",
    "predict_distribution",
    "predict_mean",
    "pwm",
    "quantile_eval",
    "quantile_functional",
    "regularized_incomplete_beta",
    "sliced_wp",
    "stone_diagnostics",
    "tail_expectation",
    "uniform_law",
    "w1_cdf",
    "w1_vs_analytic",
    "wp_bruteforce",
    "wp_exact",
    "wp_quantile",
]
