"""Closed-form risk bounds and minimax schedules for the W1 error.

The bounds split the expected estimation error at a query point into an
approximation part (how fast the conditional law moves with the covariate)
and a sampling part controlled by the effective sample size 1 / sum(W_i^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .regressor import FittedRegressor, weights_at
from .weights import WeightVector


@dataclass(frozen=True)
class ClassParams:
    """Smoothness class parameters: Hoelder exponent, Lipschitz-type scale,
    dispersion ceiling and covariate dimension."""

    holder: float
    lipschitz: float
    dispersion: float
    dim: int

    def __post_init__(self):
        if not 0.0 < self.holder <= 1.0:
            raise ValueError("holder exponent must lie in (0, 1]")
        if self.lipschitz <= 0 or self.dispersion <= 0:
            raise ValueError("lipschitz and dispersion scales must be positive")
        if self.dim < 1:
            raise ValueError("covariate dimension must be >= 1")


@dataclass(frozen=True)
class BoundReport:
    """Approximation + estimation split of a pointwise risk bound."""

    approximation: float
    estimation: float
    x: np.ndarray
    scheme: str

    def __post_init__(self):
        if self.approximation < 0 or self.estimation < 0:
            raise ValueError("bound terms must be nonnegative")

    @property
    def total(self) -> float:
        return self.approximation + self.estimation


def effective_sample_size(w) -> float:
    """1 / sum(W_i^2); equals kappa for nearest-neighbor weights."""
    values = w.values if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    return float(1.0 / np.sum(values**2))


def pointwise_risk_bound(model: FittedRegressor, true_model, x) -> BoundReport:
    """Bound on the expected W1 error at x, conditional on the realized
    covariates.

    approximation = sum_i W_i(x) * W1(F_{X_i}, F_x), evaluated with the
    model's closed-form pairwise distance; estimation = M(x) * sqrt(sum W^2)
    with M(x) the dispersion of the true conditional law at x.
    """
    wv = weights_at(model, x)
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    if hasattr(true_model, "w1_many_to"):
        gaps = true_model.w1_many_to(model.dataset.covariates, xq)
    else:
        gaps = np.array(
            [true_model.exact_w1_to(xi, xq) for xi in model.dataset.covariates]
        )
    approx = float(wv.values @ gaps)
    m_x = true_model.dispersion_at(xq)
    est = float(m_x * np.sqrt(np.sum(wv.values**2)))
    return BoundReport(
        approximation=approx, estimation=est, x=xq, scheme=wv.scheme
    )


def kernel_bound(
    params: ClassParams, n: int, h: float, covering_const: float | None = None
) -> float:
    """Uniform risk bound for unit-ball kernel weights at bandwidth h.

    Three terms: the bandwidth bias L h^H, the sampling term driven by the
    expected reciprocal ball count, and the empty-ball correction.  The
    covering constant defaults to k^(k/2) and may be overridden.
    """
    if n < 1 or h <= 0:
        raise ValueError("need n >= 1 and h > 0")
    hh, ll, mm, k = params.holder, params.lipschitz, params.dispersion, params.dim
    ck = float(covering_const) if covering_const is not None else float(k) ** (k / 2.0)
    nhk = n * h**k
    bias = ll * h**hh
    sampling = mm * np.sqrt((2.0 + 1.0 / n) * ck) * nhk**-0.5
    empty = ll * k ** (hh / 2.0) * ck / nhk
    return float(bias + sampling + empty)


def knn_bound(
    params: ClassParams, n: int, kappa: int, neighbor_const: float | None = None
) -> float:
    """Uniform risk bound for kappa-nearest-neighbor weights.

    For k = 1 the neighbor-distance constant 8 is built in; for k >= 2 the
    constant depends on the dimension and must be supplied by the caller
    (there is no safe default).
    """
    if not 1 <= kappa <= n:
        raise ValueError("need 1 <= kappa <= n")
    hh, ll, mm, k = params.holder, params.lipschitz, params.dispersion, params.dim
    ratio = kappa / n
    if k == 1:
        bias = ll * 8.0 ** (hh / 2.0) * ratio ** (hh / 2.0)
    else:
        if neighbor_const is None:
            raise ValueError("neighbor_const is required for dimension k >= 2")
        bias = ll * float(neighbor_const) ** (hh / 2.0) * ratio ** (hh / k)
    return float(bias + mm / np.sqrt(kappa))


@dataclass(frozen=True)
class RateInfo:
    """Optimal risk exponent with the schedules that attain it."""

    exponent: float
    knn_exponent: float
    knn_attains_rate: bool
    _holder: float
    _dim: int

    def kernel_bandwidth(self, n: int) -> float:
        return float(n) ** (-1.0 / (2.0 * self._holder + self._dim))

    def knn_neighbors(self, n: int) -> int:
        if self._dim == 1:
            power = self._holder / (self._holder + 1.0)
        else:
            power = self._holder / (self._holder + self._dim / 2.0)
        return max(1, min(n, ceil(float(n) ** power)))


def minimax_rate(params: ClassParams) -> RateInfo:
    """Best attainable worst-case risk order n^exponent over the class.

    Kernel weights with bandwidth n^(-1/(2H+k)) attain the exponent
    -H/(2H+k) in every dimension; neighbor weights with the returned
    schedule attain it only for k >= 2, dropping to -H/(2H+2) at k = 1.
    """
    hh, k = params.holder, params.dim
    exponent = -hh / (2.0 * hh + k)
    knn_exponent = -hh / (2.0 * hh + 2.0) if k == 1 else exponent
    return RateInfo(
        exponent=exponent,
        knn_exponent=knn_exponent,
        knn_attains_rate=k >= 2,
        _holder=hh,
        _dim=k,
    )


__all__ = [
    "ClassParams",
    "BoundReport",
    "effective_sample_size",
    "pointwise_risk_bound",
    "kernel_bound",
    "knn_bound",
    "RateInfo",
    "minimax_rate",
]
