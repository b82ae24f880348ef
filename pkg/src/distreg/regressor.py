"""The distributional regression estimator.

Fitting binds a sample to a weight scheme; prediction at a query point
returns the weighted empirical distribution of the responses, i.e. the
discrete measure putting the local weights on the observed response values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteDistribution, make_discrete
from .weights import KernelScheme, KnnScheme, WeightVector, evaluate_weights


@dataclass(frozen=True)
class Dataset:
    """An i.i.d. regression sample: covariates (n, k), responses (n, d)."""

    covariates: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.covariates, dtype=float)
        ys = np.asarray(self.responses, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        if ys.ndim == 1:
            ys = ys[:, None]
        if xs.ndim != 2 or ys.ndim != 2:
            raise ValueError("covariates and responses must be 2-d arrays")
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(
                f"sample size mismatch: {xs.shape[0]} covariates vs {ys.shape[0]} responses"
            )
        if xs.shape[0] == 0:
            raise ValueError("dataset must contain at least one observation")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "covariates", xs)
        object.__setattr__(self, "responses", ys)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def k(self) -> int:
        return self.covariates.shape[1]

    @property
    def d(self) -> int:
        return self.responses.shape[1]


@dataclass(frozen=True)
class FittedRegressor:
    dataset: Dataset
    scheme: "KernelScheme | KnnScheme"


def fit(dataset: Dataset, scheme) -> FittedRegressor:
    """Bind a dataset to a weight scheme, checking compatibility up front."""
    if isinstance(scheme, KnnScheme) and scheme.kappa > dataset.n:
        raise ValueError(
            f"kappa = {scheme.kappa} exceeds sample size n = {dataset.n}"
        )
    if not isinstance(scheme, (KernelScheme, KnnScheme)):
        raise TypeError(f"unsupported scheme type: {type(scheme).__name__}")
    return FittedRegressor(dataset=dataset, scheme=scheme)


def weights_at(model: FittedRegressor, x) -> WeightVector:
    return evaluate_weights(model.scheme, model.dataset.covariates, x)


def predict_distribution(model: FittedRegressor, x) -> DiscreteDistribution:
    """Weighted empirical distribution of the responses at x.

    Zero-weight responses are dropped, so the support size is the number of
    observations the scheme actually uses at this query point.
    """
    wv = weights_at(model, x)
    mask = wv.values > 0.0
    return make_discrete(model.dataset.responses[mask], wv.values[mask])


def predict_mean(model: FittedRegressor, x) -> np.ndarray:
    """Local-average point prediction: the mean of the predicted distribution."""
    wv = weights_at(model, x)
    return wv.values @ model.dataset.responses
